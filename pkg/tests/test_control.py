import numpy as np
import pytest

from quadverify.control import (Gains, _ref_kinematics, attitude_from_force,
                                desired_attitude, desired_force,
                                geometric_control, reference)
from quadverify.errors import DegenerateForce, UnknownFamily
from quadverify.vehicle import ControlInput, QuadState, VehicleParams, step

CIRCLE = {"family": "circle", "radius": 1.0, "period": 2.0 * np.pi,
          "altitude": -1.0}
FIG8 = {"family": "figure8", "a": 1.0, "b": 0.5, "period": 8.0,
        "altitude": -1.0}
HOVER = {"family": "hover", "p0": [0.0, 0.0, -1.0]}


@pytest.mark.parametrize("spec", [CIRCLE, FIG8])
def test_reference_derivative_consistency(spec):
    # v_d and a_d must be the time derivatives of p_d and v_d
    h = 1e-6
    for t in np.linspace(0.1, 7.9, 9):
        pm, vm, _ = _ref_kinematics(t - h, spec)
        pp, vp, _ = _ref_kinematics(t + h, spec)
        p, v, a = _ref_kinematics(t, spec)
        np.testing.assert_allclose((pp - pm) / (2 * h), v, atol=1e-6)
        np.testing.assert_allclose((vp - vm) / (2 * h), a, atol=1e-6)


def test_hover_reference_is_static():
    p, v, a = _ref_kinematics(3.7, HOVER)
    np.testing.assert_array_equal(p, [0.0, 0.0, -1.0])
    np.testing.assert_array_equal(v, np.zeros(3))
    np.testing.assert_array_equal(a, np.zeros(3))


def test_unknown_family_raises():
    with pytest.raises(UnknownFamily):
        _ref_kinematics(0.0, {"family": "spiral"})


def test_gains_validation_and_broadcast():
    g = Gains(Kp=3.0, Kv=3.0, KR=0.1, KOmega=0.05)
    np.testing.assert_array_equal(g.Kp, np.full(3, 3.0))
    with pytest.raises(ValueError):
        Gains(Kp=-1.0, Kv=1.0, KR=1.0, KOmega=1.0)


def test_attitude_from_pure_gravity_force_is_identity():
    # desired force pointing straight down in the z-down frame -> level flight
    R = attitude_from_force(np.array([0.0, 0.0, -9.81]), 0.0)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-14)


def test_attitude_from_force_is_rotation():
    rng = np.random.default_rng(4)
    for _ in range(20):
        F = rng.normal(size=3)
        F[2] = -abs(F[2]) - 1.0
        R = attitude_from_force(F, rng.uniform(-np.pi, np.pi))
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
        # body z axis opposes the desired force
        np.testing.assert_allclose(R[:, 2], -F / np.linalg.norm(F), atol=1e-12)


def test_attitude_from_tiny_force_raises():
    with pytest.raises(DegenerateForce):
        attitude_from_force(np.array([1e-9, 0.0, 0.0]), 0.0)


def test_attitude_force_parallel_to_yaw_raises():
    with pytest.raises(DegenerateForce):
        attitude_from_force(np.array([5.0, 0.0, 0.0]), 0.0)


def test_desired_attitude_rate_matches_finite_difference():
    # Omega_d from the five-point construction must agree with an
    # independent difference of the R_d sequence itself
    def force_fn(t):
        _, _, a = _ref_kinematics(t, CIRCLE)
        return a - 9.81 * np.array([0.0, 0.0, 1.0])

    t = 1.3
    R_d, Omega_d, Omega_d_dot = desired_attitude(force_fn, 0.0, t)
    h = 1e-5
    Rp = desired_attitude(force_fn, 0.0, t + h)[0]
    Rm = desired_attitude(force_fn, 0.0, t - h)[0]
    W = R_d.T @ ((Rp - Rm) / (2 * h))
    omega_ref = np.array([W[2, 1], W[0, 2], W[1, 0]])
    np.testing.assert_allclose(Omega_d, omega_ref, atol=1e-5)
    Op = desired_attitude(force_fn, 0.0, t + h)[1]
    Om = desired_attitude(force_fn, 0.0, t - h)[1]
    np.testing.assert_allclose(Omega_d_dot, (Op - Om) / (2 * h), atol=1e-4)


def test_hover_reference_point():
    ref = reference(2.0, HOVER)
    np.testing.assert_allclose(ref.R_d, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(ref.Omega_d, np.zeros(3), atol=1e-9)
    np.testing.assert_allclose(ref.Omega_d_dot, np.zeros(3), atol=1e-6)


def test_desired_force_at_zero_error():
    params = VehicleParams()
    gains = Gains.default(params.m0)
    ref = reference(0.0, HOVER)
    x = QuadState.hover(p=ref.p_d, m=params.m0)
    F = desired_force(x, ref, gains, params)
    np.testing.assert_allclose(F, [0.0, 0.0, -params.m0 * params.g], atol=1e-12)


def test_geometric_control_hover_equilibrium():
    params = VehicleParams()
    gains = Gains.default(params.m0)
    ref = reference(0.0, HOVER)
    x = QuadState.hover(p=ref.p_d, m=params.m0)
    u = geometric_control(x, ref, gains, params)
    assert u.f == pytest.approx(params.m0 * params.g, abs=1e-9)
    np.testing.assert_allclose(u.M, np.zeros(3), atol=1e-9)


def test_geometric_control_locally_converges():
    # small offset from hover shrinks under the closed loop
    params = VehicleParams()
    gains = Gains.default(params.m0)
    x = QuadState.hover(p=[0.05, -0.05, -0.9], m=params.m0)
    dt = 1e-3
    for i in range(4000):
        ref = reference(i * dt, HOVER)
        u = geometric_control(x, ref, gains, params)
        x = step(x, u, 0.0, params, dt)
    err = np.linalg.norm(x.p - np.array([0.0, 0.0, -1.0]))
    assert err < 0.01
    assert np.linalg.norm(x.v) < 0.01


def test_thrust_opposes_position_error():
    # vehicle below the setpoint (larger z) needs more thrust than hover
    params = VehicleParams()
    gains = Gains.default(params.m0)
    ref = reference(0.0, HOVER)
    x = QuadState.hover(p=[0.0, 0.0, -0.5], m=params.m0)
    u = geometric_control(x, ref, gains, params)
    assert u.f > params.m0 * params.g
