"""Pure-numpy closed-loop rollout kernel.

Reference implementation of the per-step loop: reference -> controller
(baseline or L1-augmented) -> input delay -> RK4 plant step with the
time-varying mass. The compiled kernel in _kernel_cy.pyx mirrors this loop
operation for operation; test_backend asserts the two agree.
"""

import numpy as np

from . import packing as pk
from .control import Gains, geometric_control, reference
from .l1ac import L1Params, L1State, l1_augmented_control
from .vehicle import ControlInput, QuadState, VehicleParams, step

BACKEND_NAME = "python"

DIVERGENCE_RADIUS = 1e3


def _unpack(par, family):
    params = VehicleParams(m0=par[pk.P_M0],
                           J=np.diag(par[pk.P_JX:pk.P_JZ + 1]),
                           g=par[pk.P_G], f_max=par[pk.P_FMAX])
    gains = Gains(Kp=par[pk.P_KP:pk.P_KP + 3].copy(),
                  Kv=par[pk.P_KV:pk.P_KV + 3].copy(),
                  KR=par[pk.P_KR:pk.P_KR + 3].copy(),
                  KOmega=par[pk.P_KOM:pk.P_KOM + 3].copy())
    r = par[pk.P_REF:pk.P_REF + 4]
    if family == pk.REF_HOVER:
        ref_spec = {"family": "hover", "p0": [r[0], r[1], r[2]]}
    elif family == pk.REF_CIRCLE:
        ref_spec = {"family": "circle", "radius": r[0], "period": r[1],
                    "altitude": r[2]}
    elif family == pk.REF_FIG8:
        ref_spec = {"family": "figure8", "a": r[0], "b": r[1], "period": r[2],
                    "altitude": r[3]}
    else:
        raise ValueError(f"bad family code {family}")
    l1p = L1Params(As_v=par[pk.P_ASV:pk.P_ASV + 3].copy(),
                   As_omega=par[pk.P_ASOM:pk.P_ASOM + 3].copy(),
                   omega_c_f=par[pk.P_WCF], omega_c_M=par[pk.P_WCM],
                   Ts=par[pk.P_TS], sat_f=par[pk.P_SATF], sat_M=par[pk.P_SATM])
    return params, gains, ref_spec, l1p


def run_closed_loop(x0, n_steps, par, family, l1_enabled, n_adapt, d_steps, out):
    """Fill `out` (n_steps+1, NCOL) with the closed-loop log; return status.

    Status 0 is success; k > 0 flags divergence at step k (position norm
    above 1e3 m); -k flags a non-finite state at step k.
    """
    par = np.asarray(par, dtype=float)
    params, gains, ref_spec, l1p = _unpack(par, family)
    dt = par[pk.P_DT]
    a_m = par[pk.P_MASS_A]
    om_m = par[pk.P_MASS_OM]
    ph_m = par[pk.P_MASS_PH]

    x = QuadState.from_vector(np.asarray(x0, dtype=float))
    l1 = L1State.init_from(x)
    cmd = np.zeros((n_steps + 1, 4))
    hold = np.array([params.m0 * params.g, 0.0, 0.0, 0.0])

    for k in range(n_steps + 1):
        t = k * dt
        ref = reference(t, ref_spec, g=params.g)
        if l1_enabled:
            u_total, l1_next = l1_augmented_control(x, ref, gains, params,
                                                    l1p, l1, dt)
        else:
            u_total = geometric_control(x, ref, gains, params)
            l1_next = l1
        cmd[k] = u_total.as_array()

        raw = cmd[k - d_steps] if k >= d_steps else hold
        f_app = min(max(raw[0], 0.0), params.f_max)
        applied = ControlInput(f=f_app, M=raw[1:4].copy())

        row = out[k]
        row[pk.C_T] = t
        row[pk.C_P:pk.C_P + 3] = x.p
        row[pk.C_V:pk.C_V + 3] = x.v
        row[pk.C_R:pk.C_R + 9] = x.R.reshape(9)
        row[pk.C_OM:pk.C_OM + 3] = x.Omega
        row[pk.C_M] = x.m_actual
        row[pk.C_FCMD] = u_total.f
        row[pk.C_MCMD:pk.C_MCMD + 3] = u_total.M
        row[pk.C_FAPP] = applied.f
        row[pk.C_MAPP:pk.C_MAPP + 3] = applied.M
        row[pk.C_UL1:pk.C_UL1 + 4] = l1.u_l1

        if k == n_steps:
            break
        l1 = l1_next

        if a_m != 0.0:
            s = np.sin(om_m * t + ph_m)
            m_dot = x.m_actual * a_m * om_m * np.cos(om_m * t + ph_m) / (1.0 + a_m * s)
        else:
            m_dot = 0.0
        x = step(x, applied, m_dot, params, dt)
        if not np.all(np.isfinite(x.as_vector())):
            return -(k + 1)
        if np.linalg.norm(x.p) > DIVERGENCE_RADIUS:
            return k + 1
    return 0
