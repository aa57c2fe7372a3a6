"""Verification toolkit for quadrotor geometric control with L1 adaptive
augmentation: closed-loop simulation under mass uncertainty and input delay,
and PAC-guaranteed data-driven reachtubes over the resulting black box.
"""

from .backend import BACKEND_NAME, available_backends
from .control import Gains, ReferencePoint, geometric_control, reference
from .l1ac import L1Params, L1State, l1_augmented_control
from .reach import (DiscrepancyModel, HyperRect, Reachtube, check_safety,
                    compute_reachtube, compute_reachtube_from_simulator,
                    learn_discrepancy, pac_sample_count, sample_initial)
from .scenario import (DelayBuffer, MassProfile, Scenario, Trajectory,
                       delay_apply, make_simulator, mass_value, simulate)
from .vehicle import ControlInput, QuadState, VehicleParams

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "available_backends",
    "Gains", "ReferencePoint", "geometric_control", "reference",
    "L1Params", "L1State", "l1_augmented_control",
    "DiscrepancyModel", "HyperRect", "Reachtube", "check_safety",
    "compute_reachtube", "compute_reachtube_from_simulator",
    "learn_discrepancy", "pac_sample_count", "sample_initial",
    "DelayBuffer", "MassProfile", "Scenario", "Trajectory", "delay_apply",
    "make_simulator", "mass_value", "simulate",
    "ControlInput", "QuadState", "VehicleParams",
    "__version__",
]
