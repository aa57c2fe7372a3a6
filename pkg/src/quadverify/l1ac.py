"""L1 adaptive augmentation: state predictor, piecewise-constant adaptation,
low-pass filter.

Only matched uncertainty is estimated: one thrust channel (resolved along the
body z-axis of the velocity prediction error) and three moment channels (from
the body-rate prediction error). The compensation u_l1 = [u_f, u_M] is added
on top of the baseline geometric command.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .control import Gains, ReferencePoint, geometric_control
from .errors import NonFiniteDerivative
from .vehicle import E3, ControlInput, QuadState, VehicleParams

DEFAULT_AS = -10.0
# Filter bandwidths trade adaptation speed against delay robustness; these
# keep the thrust-compensation loop stable up to ~120 ms of input delay.
DEFAULT_WC_F = 15.0
DEFAULT_WC_M = 15.0


@dataclass
class L1Params:
    """Predictor gains, filter bandwidths, adaptation period and saturation."""

    As_v: np.ndarray = field(default_factory=lambda: np.full(3, DEFAULT_AS))
    As_omega: np.ndarray = field(default_factory=lambda: np.full(3, DEFAULT_AS))
    omega_c_f: float = DEFAULT_WC_F
    omega_c_M: float = DEFAULT_WC_M
    Ts: float = 1e-3
    sat_f: float = 0.5 * 0.752 * 9.81
    sat_M: float = 0.1

    def __post_init__(self):
        self.As_v = np.asarray(self.As_v, dtype=float)
        self.As_omega = np.asarray(self.As_omega, dtype=float)
        if np.any(self.As_v >= 0) or np.any(self.As_omega >= 0):
            raise ValueError("predictor gains must be strictly negative (Hurwitz)")
        if self.omega_c_f <= 0 or self.omega_c_M <= 0 or self.Ts <= 0:
            raise ValueError("filter bandwidths and adaptation period must be > 0")


@dataclass
class L1State:
    """Predictor states, current uncertainty estimate and filtered output."""

    v_hat: np.ndarray
    omega_hat: np.ndarray
    sigma_hat_m: np.ndarray  # [sigma_f, sigma_Mx, sigma_My, sigma_Mz]
    u_l1: np.ndarray         # [u_f, u_Mx, u_My, u_Mz]
    steps: int = 0

    @classmethod
    def init_from(cls, x: QuadState):
        return cls(v_hat=x.v.copy(), omega_hat=x.Omega.copy(),
                   sigma_hat_m=np.zeros(4), u_l1=np.zeros(4))


def adaptation_gain_scalar(x_tilde, a_s, Ts):
    """Piecewise-constant law for a scalar error channel with unit input gain.

    Returns -Phi^{-1} exp(a_s Ts) x_tilde with Phi = (exp(a_s Ts) - 1)/a_s.
    """
    e = math.exp(a_s * Ts)
    phi = (e - 1.0) / a_s
    return -(1.0 / phi) * e * x_tilde


def adaptation_update(v_tilde, omega_tilde, x: QuadState, params: VehicleParams,
                      l1p: L1Params, Ts=None):
    """Matched uncertainty estimate held constant over one adaptation period.

    The scalar law is mapped through the inverse input gain of each channel
    (-m0 for thrust, J_ii for the moments) so the estimate lands in input
    units; without that mapping the moment channels are unstable because
    J ~ 1e-3 scales the error dynamics.
    """
    if Ts is None:
        Ts = l1p.Ts
    vt_body_z = float((x.R.T @ v_tilde)[2])
    sigma_f = -params.m0 * adaptation_gain_scalar(vt_body_z, l1p.As_v[2], Ts)
    Jd = np.diag(params.J)
    sigma_M = np.array([
        Jd[i] * adaptation_gain_scalar(float(omega_tilde[i]), l1p.As_omega[i], Ts)
        for i in range(3)
    ])
    return np.array([sigma_f, sigma_M[0], sigma_M[1], sigma_M[2]])


def predictor_step(l1: L1State, x: QuadState, u_total: ControlInput,
                   params: VehicleParams, l1p: L1Params, dt: float) -> L1State:
    """Forward-Euler update of the velocity and body-rate predictors."""
    v_tilde = l1.v_hat - x.v
    omega_tilde = l1.omega_hat - x.Omega
    sigma_f = l1.sigma_hat_m[0]
    sigma_M = l1.sigma_hat_m[1:4]
    Jd = np.diag(params.J)
    v_hat_dot = (params.g * E3 - (u_total.f + sigma_f) * (x.R @ E3) / params.m0
                 + l1p.As_v * v_tilde)
    omega_hat_dot = ((u_total.M + sigma_M - np.cross(x.Omega, Jd * x.Omega)) / Jd
                     + l1p.As_omega * omega_tilde)
    v_hat = l1.v_hat + dt * v_hat_dot
    omega_hat = l1.omega_hat + dt * omega_hat_dot
    if not (np.all(np.isfinite(v_hat)) and np.all(np.isfinite(omega_hat))):
        raise NonFiniteDerivative("non-finite predictor state")
    return L1State(v_hat=v_hat, omega_hat=omega_hat,
                   sigma_hat_m=l1.sigma_hat_m.copy(), u_l1=l1.u_l1.copy(),
                   steps=l1.steps)


def lpf_step(filter_state, sigma_hat_m, l1p: L1Params, dt):
    """Exact discrete first-order low-pass toward -sigma_hat per channel.

    u' = u exp(-wc dt) + (-sigma)(1 - exp(-wc dt)); a convex combination, so
    bounded inputs give bounded outputs with DC gain exactly one.
    """
    u = np.asarray(filter_state, dtype=float)
    sig = np.asarray(sigma_hat_m, dtype=float)
    wc = np.array([l1p.omega_c_f, l1p.omega_c_M, l1p.omega_c_M, l1p.omega_c_M])
    alpha = np.exp(-wc * dt)
    return alpha * u + (1.0 - alpha) * (-sig)


def _saturate(u_l1, l1p: L1Params):
    out = u_l1.copy()
    out[0] = min(max(out[0], -l1p.sat_f), l1p.sat_f)
    out[1:4] = np.clip(out[1:4], -l1p.sat_M, l1p.sat_M)
    return out


def l1_augmented_control(x: QuadState, ref: ReferencePoint, gains: Gains,
                         params: VehicleParams, l1p: L1Params, l1: L1State,
                         dt: float):
    """One controller tick: baseline + compensation, then the L1 updates.

    Returns (u_total, new_l1_state). The compensation added this tick is the
    filter output carried in `l1`; the adaptation runs every round(Ts/dt)
    ticks and the filter every tick.
    """
    u_geo = geometric_control(x, ref, gains, params)
    u_total = ControlInput(f=u_geo.f + l1.u_l1[0], M=u_geo.M + l1.u_l1[1:4])

    n_adapt = max(1, round(l1p.Ts / dt))
    v_tilde = l1.v_hat - x.v
    omega_tilde = l1.omega_hat - x.Omega
    if l1.steps % n_adapt == 0:
        sigma = adaptation_update(v_tilde, omega_tilde, x, params, l1p,
                                  Ts=n_adapt * dt)
    else:
        sigma = l1.sigma_hat_m.copy()

    u_pred = ControlInput(f=min(max(u_total.f, 0.0), params.f_max), M=u_total.M)
    nxt = predictor_step(
        L1State(v_hat=l1.v_hat, omega_hat=l1.omega_hat, sigma_hat_m=sigma,
                u_l1=l1.u_l1, steps=l1.steps),
        x, u_pred, params, l1p, dt)
    nxt.u_l1 = _saturate(lpf_step(l1.u_l1, sigma, l1p, dt), l1p)
    nxt.steps = l1.steps + 1
    return u_total, nxt
