"""Geometric tracking controller on SO(3) and reference-trajectory generation.

The desired attitude rate feedforward (Omega_d, Omega_d_dot) is produced by
central finite differencing of the desired-rotation construction rather than
closed-form flatness expressions; the differencing step is FD_H seconds.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateForce, UnknownFamily
from .geometry import rotation_error
from .vehicle import E3, ControlInput, QuadState, VehicleParams

FD_H = 1e-4
FORCE_EPS = 1e-6


@dataclass
class Gains:
    """Diagonal gains for position, velocity, attitude and rate loops."""

    Kp: np.ndarray
    Kv: np.ndarray
    KR: np.ndarray
    KOmega: np.ndarray

    def __post_init__(self):
        for name in ("Kp", "Kv", "KR", "KOmega"):
            val = np.asarray(getattr(self, name), dtype=float)
            if val.shape == ():
                val = np.full(3, float(val))
            if np.any(val <= 0):
                raise ValueError(f"{name} must be strictly positive")
            setattr(self, name, val)

    @classmethod
    def default(cls, m0):
        # Attitude gains are soft enough to keep the rate loop's crossover
        # near 10 rad/s, which preserves stability under input delays up to
        # ~120 ms while still separating it from the 2 rad/s position loop.
        return cls(Kp=4.0 * m0 * np.ones(3), Kv=4.0 * m0 * np.ones(3),
                   KR=0.09 * np.ones(3), KOmega=0.03 * np.ones(3))


@dataclass
class ReferencePoint:
    """Desired flat outputs and the attitude feedforward derived from them."""

    p_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    psi_d: float
    R_d: np.ndarray
    Omega_d: np.ndarray
    Omega_d_dot: np.ndarray


def _ref_kinematics(t, spec):
    """p_d, v_d, a_d of the named reference family at time t."""
    family = spec.get("family")
    if family == "hover":
        p0 = np.asarray(spec["p0"], dtype=float)
        return p0, np.zeros(3), np.zeros(3)
    if family == "circle":
        r = float(spec["radius"])
        w = 2.0 * math.pi / float(spec["period"])
        z = float(spec["altitude"])
        c, s = math.cos(w * t), math.sin(w * t)
        p = np.array([r * c, r * s, z])
        v = np.array([-r * w * s, r * w * c, 0.0])
        a = np.array([-r * w * w * c, -r * w * w * s, 0.0])
        return p, v, a
    if family == "figure8":
        a_ = float(spec["a"])
        b_ = float(spec["b"])
        w = 2.0 * math.pi / float(spec["period"])
        z = float(spec["altitude"])
        p = np.array([a_ * math.sin(w * t), b_ * math.sin(2.0 * w * t), z])
        v = np.array([a_ * w * math.cos(w * t),
                      2.0 * b_ * w * math.cos(2.0 * w * t), 0.0])
        a = np.array([-a_ * w * w * math.sin(w * t),
                      -4.0 * b_ * w * w * math.sin(2.0 * w * t), 0.0])
        return p, v, a
    raise UnknownFamily(f"unknown reference family {family!r}")


def attitude_from_force(F_d, psi_d):
    """Rotation whose body-z axis opposes F_d, with yaw psi_d.

    Columns are [b1, b2, b3] with b3 = -F_d/|F_d| and b1 aligned with the
    yaw direction projected onto the plane normal to b3.
    """
    F_d = np.asarray(F_d, dtype=float)
    n = np.linalg.norm(F_d)
    if n < FORCE_EPS:
        raise DegenerateForce(f"|F_d| = {n:.3e} < {FORCE_EPS}")
    b3 = -F_d / n
    b1c = np.array([math.cos(psi_d), math.sin(psi_d), 0.0])
    b2 = np.cross(b3, b1c)
    n2 = np.linalg.norm(b2)
    if n2 < FORCE_EPS:
        raise DegenerateForce("desired thrust parallel to yaw direction")
    b2 /= n2
    b1 = np.cross(b2, b3)
    return np.column_stack([b1, b2, b3])


def desired_attitude(force_fn, psi_d, t, h=FD_H):
    """(R_d, Omega_d, Omega_d_dot) from a time-dependent desired force.

    force_fn maps time to the desired force vector. Omega_d comes from
    vee(R_d^T Rdot_d) with Rdot_d a central difference of step h; Omega_d_dot
    is a central difference of Omega_d itself (five force evaluations total).
    """
    Rs = [attitude_from_force(force_fn(t + j * h), psi_d) for j in (-2, -1, 0, 1, 2)]

    def omega_at(i):
        Rdot = (Rs[i + 1] - Rs[i - 1]) / (2.0 * h)
        W = Rs[i].T @ Rdot
        return np.array([W[2, 1], W[0, 2], W[1, 0]])

    Omega_d = omega_at(2)
    Omega_d_dot = (omega_at(3) - omega_at(1)) / (2.0 * h)
    return Rs[2], Omega_d, Omega_d_dot


def reference(t, spec, g=9.81):
    """Full reference point of a trajectory family at time t.

    The attitude feedforward uses the zero-error desired force a_d - g e3
    (the design mass cancels in the normalisation), so it is a function of the
    reference alone and can be tabulated independently of the vehicle state.
    """
    p_d, v_d, a_d = _ref_kinematics(t, spec)

    def nominal_force(s):
        _, _, a_s = _ref_kinematics(s, spec)
        return a_s - g * E3

    R_d, Omega_d, Omega_d_dot = desired_attitude(nominal_force, 0.0, t)
    return ReferencePoint(p_d=p_d, v_d=v_d, a_d=a_d, psi_d=0.0, R_d=R_d,
                          Omega_d=Omega_d, Omega_d_dot=Omega_d_dot)


def desired_force(x: QuadState, ref: ReferencePoint, gains: Gains,
                  params: VehicleParams):
    """F_d = -Kp e_p - Kv e_v - m0 g e3 + m0 a_d (design mass throughout)."""
    e_p = x.p - ref.p_d
    e_v = x.v - ref.v_d
    return (-gains.Kp * e_p - gains.Kv * e_v
            - params.m0 * params.g * E3 + params.m0 * ref.a_d)


def geometric_control(x: QuadState, ref: ReferencePoint, gains: Gains,
                      params: VehicleParams) -> ControlInput:
    """Baseline geometric tracking law.

    Thrust: f = -F_d . (R e3). Moment: PD on the SO(3) attitude error plus
    gyroscopic and attitude-feedforward terms. The attitude setpoint for the
    error terms is rebuilt from the feedback force F_d; the rate feedforwards
    Omega_d, Omega_d_dot come from the reference.
    """
    F_d = desired_force(x, ref, gains, params)
    f = float(-F_d @ (x.R @ E3))
    R_d = attitude_from_force(F_d, ref.psi_d)
    e_R = rotation_error(x.R, R_d)
    RtRd = x.R.T @ R_d
    e_Omega = x.Omega - RtRd @ ref.Omega_d
    Jd = np.diag(params.J)
    gyro = np.cross(x.Omega, Jd * x.Omega)
    ff = Jd * (np.cross(x.Omega, RtRd @ ref.Omega_d) - RtRd @ ref.Omega_d_dot)
    M = -gains.KR * e_R - gains.KOmega * e_Omega + gyro - ff
    return ControlInput(f=f, M=M)
