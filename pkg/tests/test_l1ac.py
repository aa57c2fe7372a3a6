import numpy as np
import pytest

from quadverify.control import Gains, reference
from quadverify.l1ac import (L1Params, L1State, _saturate, adaptation_gain_scalar,
                             adaptation_update, l1_augmented_control, lpf_step,
                             predictor_step)
from quadverify.vehicle import ControlInput, QuadState, VehicleParams

HOVER = {"family": "hover", "p0": [0.0, 0.0, -1.0]}


def test_params_validation():
    with pytest.raises(ValueError):
        L1Params(As_v=np.array([1.0, -1.0, -1.0]))
    with pytest.raises(ValueError):
        L1Params(omega_c_f=0.0)
    with pytest.raises(ValueError):
        L1Params(Ts=-1e-3)


def test_adaptation_scalar_oracle():
    # hand-derived from the discretized error dynamics:
    # Phi = (e^{a Ts} - 1)/a = 9.950166e-4, estimate = -Phi^-1 e^{a Ts} x
    # = -(10 * 0.99004983 / 9.950166e-4) * 0.01 / 10 = -9.9500833
    got = adaptation_gain_scalar(0.01, -10.0, 1e-3)
    assert got == pytest.approx(-9.9500833, abs=1e-6)


def test_adaptation_scalar_is_linear_in_error():
    a = adaptation_gain_scalar(0.01, -10.0, 1e-3)
    b = adaptation_gain_scalar(0.02, -10.0, 1e-3)
    assert b == pytest.approx(2.0 * a, rel=1e-12)


def test_adaptation_update_channel_mapping():
    params = VehicleParams()
    l1p = L1Params()
    x = QuadState.hover(p=np.zeros(3), m=params.m0)
    v_tilde = np.array([0.0, 0.0, 0.01])
    omega_tilde = np.array([0.02, 0.0, 0.0])
    sig = adaptation_update(v_tilde, omega_tilde, x, params, l1p)
    scalar_v = adaptation_gain_scalar(0.01, -10.0, l1p.Ts)
    scalar_w = adaptation_gain_scalar(0.02, -10.0, l1p.Ts)
    assert sig[0] == pytest.approx(-params.m0 * scalar_v)
    assert sig[1] == pytest.approx(params.J[0, 0] * scalar_w)
    assert sig[2] == 0.0 and sig[3] == 0.0


def test_lpf_step_oracle():
    l1p = L1Params(omega_c_f=50.0, omega_c_M=50.0)
    u = lpf_step(np.zeros(4), np.ones(4), l1p, 1e-3)
    np.testing.assert_allclose(u, -(1.0 - np.exp(-0.05)), atol=1e-12)
    assert u[0] == pytest.approx(-0.0487705755, abs=1e-9)


def test_lpf_dc_gain_is_one():
    l1p = L1Params()
    u = np.zeros(4)
    for _ in range(20000):
        u = lpf_step(u, np.full(4, 0.7), l1p, 1e-3)
    np.testing.assert_allclose(u, -0.7, atol=1e-9)


def test_lpf_output_bounded_by_input():
    rng = np.random.default_rng(5)
    l1p = L1Params()
    u = np.zeros(4)
    for _ in range(1000):
        u = lpf_step(u, rng.uniform(-1.0, 1.0, size=4), l1p, 1e-3)
        assert np.all(np.abs(u) <= 1.0 + 1e-12)


def test_saturation_clips_channels():
    l1p = L1Params(sat_f=1.0, sat_M=0.1)
    out = _saturate(np.array([5.0, -0.5, 0.05, 0.5]), l1p)
    np.testing.assert_allclose(out, [1.0, -0.1, 0.05, 0.1])


def test_predictor_stationary_at_hover():
    # perfect model, zero prediction error, hover thrust: predictor holds
    params = VehicleParams()
    l1p = L1Params()
    x = QuadState.hover(p=np.zeros(3), m=params.m0)
    l1 = L1State.init_from(x)
    u = ControlInput(f=params.m0 * params.g, M=np.zeros(3))
    nxt = predictor_step(l1, x, u, params, l1p, 1e-3)
    np.testing.assert_allclose(nxt.v_hat, x.v, atol=1e-15)
    np.testing.assert_allclose(nxt.omega_hat, x.Omega, atol=1e-15)


def test_predictor_error_feedback_contracts():
    # with matching dynamics the prediction error decays at rate As
    params = VehicleParams()
    l1p = L1Params()
    x = QuadState.hover(p=np.zeros(3), m=params.m0)
    l1 = L1State.init_from(x)
    l1.v_hat = x.v + np.array([0.0, 0.0, 0.1])
    u = ControlInput(f=params.m0 * params.g, M=np.zeros(3))
    nxt = predictor_step(l1, x, u, params, l1p, 1e-3)
    expected = 0.1 * (1.0 + l1p.As_v[2] * 1e-3)
    assert nxt.v_hat[2] - x.v[2] == pytest.approx(expected, abs=1e-12)


def test_augmented_control_transparent_at_nominal():
    # no uncertainty: the compensation stays numerically negligible
    params = VehicleParams()
    gains = Gains.default(params.m0)
    l1p = L1Params()
    from quadverify.vehicle import step
    x = QuadState.hover(p=[0.0, 0.0, -1.0], m=params.m0)
    l1 = L1State.init_from(x)
    dt = 1e-3
    for i in range(2000):
        ref = reference(i * dt, HOVER)
        u, l1 = l1_augmented_control(x, ref, gains, params, l1p, l1, dt)
        x = step(x, u, 0.0, params, dt)
    assert np.max(np.abs(l1.u_l1)) < 1e-6
    assert np.linalg.norm(x.p - np.array([0.0, 0.0, -1.0])) < 1e-6


def test_augmented_control_compensates_mass_offset():
    # +20% actual mass: the thrust compensation settles near 0.2 m0 g
    params = VehicleParams()
    gains = Gains.default(params.m0)
    l1p = L1Params()
    from quadverify.vehicle import step
    m_act = 1.2 * params.m0
    x = QuadState.hover(p=[0.0, 0.0, -1.0], m=m_act)
    l1 = L1State.init_from(x)
    dt = 1e-3
    tail = []
    for i in range(3000):
        ref = reference(i * dt, HOVER)
        u, l1 = l1_augmented_control(x, ref, gains, params, l1p, l1, dt)
        x = step(x, u, 0.0, params, dt)
        if i * dt >= 2.0:
            tail.append(l1.u_l1[0])
    target = 0.2 * params.m0 * params.g
    assert np.max(np.abs(np.array(tail) - target)) / target < 0.05
