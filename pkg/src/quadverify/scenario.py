"""Experiment description: uncertainty injection, input delay, and the
closed-loop black-box simulator consumed by the reachability engine.

A Scenario owns every knob of a run (vehicle, gains, reference, mass profile,
delay, L1 configuration, verification hyperparameters and the initial set).
Scenarios serialize to a JSON-compatible dict with schema_version 1; omitted
keys are filled from declared defaults so every run is reproducible from its
resolved form alone.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import packing as pk
from .backend import get_kernel, kernel as default_kernel
from .control import Gains, _ref_kinematics
from .errors import (NonFiniteDerivative, NonMonotonicTime, ScenarioParseError,
                     ScenarioValidationError, SimulationDiverged)
from .l1ac import L1Params
from .vehicle import ControlInput, VehicleParams

SCHEMA_VERSION = 1

STATE_NAMES = ["px", "py", "pz", "vx", "vy", "vz",
               "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
               "wx", "wy", "wz", "m"]
NAME_TO_INDEX = {n: i for i, n in enumerate(STATE_NAMES)}

_FAMILY_CODES = {"hover": pk.REF_HOVER, "circle": pk.REF_CIRCLE,
                 "figure8": pk.REF_FIG8}
_FAMILY_KEYS = {"hover": {"p0"},
                "circle": {"radius", "period", "altitude"},
                "figure8": {"a", "b", "period", "altitude"}}


@dataclass
class MassProfile:
    """Sinusoidal actual-mass profile m(t) = m_bar (1 + a sin(w t + phase))."""

    m_lo: float
    m_hi: float
    amplitude: float = 0.1
    omega_m: float = 2.0
    phase: float = 0.0

    def __post_init__(self):
        if not 0 < self.m_lo <= self.m_hi:
            raise ScenarioValidationError("mass bounds must satisfy 0 < m_lo <= m_hi")
        if not 0 <= self.amplitude < 1:
            raise ScenarioValidationError("amplitude must satisfy 0 <= a < 1")


def mass_value(t, m_bar, prof: MassProfile):
    """Actual mass and its rate at time t for mean mass m_bar."""
    ph = prof.omega_m * t + prof.phase
    m = m_bar * (1.0 + prof.amplitude * math.sin(ph))
    m_dot = m_bar * prof.amplitude * prof.omega_m * math.cos(ph)
    return m, m_dot


class DelayBuffer:
    """Pure input-delay line over the control command stream.

    Records (t, u) pairs; the applied command at time t is the newest record
    with timestamp <= t - tau, or hold_value during start-up.
    """

    def __init__(self, tau, hold_value: ControlInput):
        if tau < 0:
            raise ScenarioValidationError("tau >= 0 required")
        self.tau = tau
        self.hold_value = hold_value
        self._times = []
        self._records = []

    def apply(self, u: ControlInput, t):
        if self._times and t < self._times[-1]:
            raise NonMonotonicTime(f"t = {t} after t = {self._times[-1]}")
        self._times.append(t)
        self._records.append(u)
        if self.tau == 0.0:
            return u
        cutoff = t - self.tau
        # newest record at or before the cutoff
        for i in range(len(self._times) - 1, -1, -1):
            if self._times[i] <= cutoff + 1e-12:
                return self._records[i]
        return self.hold_value


def delay_apply(buf: DelayBuffer, u: ControlInput, t):
    return buf.apply(u, t)


@dataclass
class Scenario:
    """Fully resolved experiment description."""

    params: VehicleParams
    gains: Gains
    ref_spec: dict
    mass: MassProfile
    tau: float
    l1_enabled: bool
    l1p: L1Params
    t_f: float
    dt: float
    epsilon: float = 0.05
    delta: float = 0.01
    segments: int = 10
    seed: int = 0
    p_half: np.ndarray = field(default_factory=lambda: np.full(3, 0.01))
    v_half: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_half: np.ndarray = field(default_factory=lambda: np.zeros(3))
    unsafe: dict | None = None

    def __post_init__(self):
        self.p_half = np.asarray(self.p_half, dtype=float)
        self.v_half = np.asarray(self.v_half, dtype=float)
        self.omega_half = np.asarray(self.omega_half, dtype=float)
        if self.t_f <= 0:
            raise ScenarioValidationError("t_f > 0 required")
        if not 0 < self.dt <= 0.01:
            raise ScenarioValidationError("0 < dt <= 0.01 required")
        n = self.t_f / self.dt
        if abs(n - round(n)) > 1e-6:
            raise ScenarioValidationError("dt must divide t_f")
        if self.tau < 0:
            raise ScenarioValidationError("tau >= 0 required")
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ScenarioValidationError("epsilon and delta must be in (0, 1)")

    # -- grid ----------------------------------------------------------------
    @property
    def n_steps(self):
        return round(self.t_f / self.dt)

    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    # -- initial set ---------------------------------------------------------
    def center_state(self):
        """Center of the initial set as a 19-vector (attitude = identity)."""
        p_d, v_d, _ = _ref_kinematics(0.0, self.ref_spec)
        x = np.zeros(19)
        x[0:3] = p_d
        x[3:6] = v_d
        x[6:15] = np.eye(3).reshape(9)
        x[18] = 0.5 * (self.mass.m_lo + self.mass.m_hi)
        return x

    def initial_box(self):
        """(lo, hi) 19-vectors of the initial hyperrectangle X0."""
        c = self.center_state()
        half = np.zeros(19)
        half[0:3] = self.p_half
        half[3:6] = self.v_half
        half[15:18] = self.omega_half
        lo, hi = c - half, c + half
        lo[18], hi[18] = self.mass.m_lo, self.mass.m_hi
        return lo, hi

    # -- kernel packing ------------------------------------------------------
    def pack(self):
        par = np.zeros(pk.NPAR)
        par[pk.P_M0] = self.params.m0
        par[pk.P_JX:pk.P_JZ + 1] = np.diag(self.params.J)
        par[pk.P_G] = self.params.g
        par[pk.P_FMAX] = self.params.f_max
        par[pk.P_KP:pk.P_KP + 3] = self.gains.Kp
        par[pk.P_KV:pk.P_KV + 3] = self.gains.Kv
        par[pk.P_KR:pk.P_KR + 3] = self.gains.KR
        par[pk.P_KOM:pk.P_KOM + 3] = self.gains.KOmega
        fam = self.ref_spec["family"]
        family = _FAMILY_CODES[fam]
        if fam == "hover":
            par[pk.P_REF:pk.P_REF + 3] = np.asarray(self.ref_spec["p0"], float)
        elif fam == "circle":
            par[pk.P_REF:pk.P_REF + 3] = [self.ref_spec["radius"],
                                          self.ref_spec["period"],
                                          self.ref_spec["altitude"]]
        else:
            par[pk.P_REF:pk.P_REF + 4] = [self.ref_spec["a"], self.ref_spec["b"],
                                          self.ref_spec["period"],
                                          self.ref_spec["altitude"]]
        par[pk.P_MASS_A] = self.mass.amplitude
        par[pk.P_MASS_OM] = self.mass.omega_m
        par[pk.P_MASS_PH] = self.mass.phase
        par[pk.P_TAU] = self.tau
        par[pk.P_ASV:pk.P_ASV + 3] = self.l1p.As_v
        par[pk.P_ASOM:pk.P_ASOM + 3] = self.l1p.As_omega
        par[pk.P_WCF] = self.l1p.omega_c_f
        par[pk.P_WCM] = self.l1p.omega_c_M
        par[pk.P_TS] = self.l1p.Ts
        par[pk.P_SATF] = self.l1p.sat_f
        par[pk.P_SATM] = self.l1p.sat_M
        par[pk.P_DT] = self.dt
        n_adapt = max(1, round(self.l1p.Ts / self.dt))
        d = self.tau / self.dt
        d_steps = round(d) if abs(d - round(d)) < 1e-6 else math.ceil(d)
        return par, family, int(self.l1_enabled), n_adapt, d_steps

    # -- (de)serialization ---------------------------------------------------
    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "vehicle": {"m0": self.params.m0,
                        "J": list(np.diag(self.params.J)),
                        "g": self.params.g,
                        "f_max": self.params.f_max},
            "gains": {"Kp": list(self.gains.Kp), "Kv": list(self.gains.Kv),
                      "KR": list(self.gains.KR),
                      "KOmega": list(self.gains.KOmega)},
            "reference": dict(self.ref_spec),
            "uncertainty": {"m_lo": self.mass.m_lo, "m_hi": self.mass.m_hi,
                            "amplitude": self.mass.amplitude,
                            "omega_m": self.mass.omega_m,
                            "phase": self.mass.phase},
            "delay": {"tau": self.tau},
            "l1": {"enabled": self.l1_enabled,
                   "As_v": list(self.l1p.As_v),
                   "As_omega": list(self.l1p.As_omega),
                   "omega_c_f": self.l1p.omega_c_f,
                   "omega_c_M": self.l1p.omega_c_M,
                   "Ts": self.l1p.Ts,
                   "sat_f": self.l1p.sat_f,
                   "sat_M": self.l1p.sat_M},
            "verify": {"t_f": self.t_f, "dt": self.dt,
                       "epsilon": self.epsilon, "delta": self.delta,
                       "segments": self.segments, "seed": self.seed,
                       "x0": {"p_half": list(self.p_half),
                              "v_half": list(self.v_half),
                              "omega_half": list(self.omega_half)},
                       "unsafe": self.unsafe},
        }

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw):
        return _scenario_from_dict(raw)


def _check_keys(section, allowed, path):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ScenarioParseError(
            f"unknown key(s) {sorted(unknown)} in section '{path}'")


def _vec3(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.shape == ():
        arr = np.full(3, float(arr))
    if arr.shape != (3,):
        raise ScenarioValidationError(f"{name} must be a scalar or 3-vector")
    return arr


def _scenario_from_dict(raw):
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    _check_keys(raw, ["schema_version", "vehicle", "gains", "reference",
                      "uncertainty", "delay", "l1", "verify"], "<root>")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioParseError(
            f"unsupported schema_version {raw.get('schema_version')!r}")
    if "reference" not in raw:
        raise ScenarioParseError("missing required section 'reference'")

    veh = dict(raw.get("vehicle", {}))
    _check_keys(veh, ["m0", "J", "g", "f_max"], "vehicle")
    m0 = float(veh.get("m0", 0.752))
    g = float(veh.get("g", 9.81))
    J = np.diag(_vec3(veh.get("J", [0.0025, 0.0021, 0.0043]), "J"))
    f_max = float(veh.get("f_max", 4.0 * m0 * g))
    try:
        params = VehicleParams(m0=m0, J=J, g=g, f_max=f_max)
    except ValueError as e:
        raise ScenarioValidationError(str(e)) from e

    gsec = dict(raw.get("gains", {}))
    _check_keys(gsec, ["Kp", "Kv", "KR", "KOmega"], "gains")
    try:
        gains = Gains(Kp=_vec3(gsec.get("Kp", 4.0 * m0), "Kp"),
                      Kv=_vec3(gsec.get("Kv", 4.0 * m0), "Kv"),
                      KR=_vec3(gsec.get("KR", 0.09), "KR"),
                      KOmega=_vec3(gsec.get("KOmega", 0.03), "KOmega"))
    except ValueError as e:
        raise ScenarioValidationError(str(e)) from e

    ref = dict(raw["reference"])
    fam = ref.get("family")
    if fam not in _FAMILY_CODES:
        raise ScenarioValidationError(
            f"reference family must be one of {sorted(_FAMILY_CODES)}")
    _check_keys(ref, {"family"} | _FAMILY_KEYS[fam], "reference")
    if fam == "hover":
        ref.setdefault("p0", [0.0, 0.0, -1.0])
        ref["p0"] = [float(v) for v in ref["p0"]]
    elif fam == "circle":
        ref = {"family": "circle", "radius": float(ref.get("radius", 1.0)),
               "period": float(ref.get("period", 2.0 * math.pi)),
               "altitude": float(ref.get("altitude", -1.0))}
    else:
        ref = {"family": "figure8", "a": float(ref.get("a", 1.0)),
               "b": float(ref.get("b", 0.5)),
               "period": float(ref.get("period", 8.0)),
               "altitude": float(ref.get("altitude", -1.0))}

    unc = dict(raw.get("uncertainty", {}))
    _check_keys(unc, ["m_lo", "m_hi", "amplitude", "omega_m", "phase"],
                "uncertainty")
    mass = MassProfile(m_lo=float(unc.get("m_lo", 0.8 * m0)),
                       m_hi=float(unc.get("m_hi", 1.2 * m0)),
                       amplitude=float(unc.get("amplitude", 0.1)),
                       omega_m=float(unc.get("omega_m", 2.0)),
                       phase=float(unc.get("phase", 0.0)))

    dsec = dict(raw.get("delay", {}))
    _check_keys(dsec, ["tau"], "delay")
    tau = float(dsec.get("tau", 0.0))

    l1sec = dict(raw.get("l1", {}))
    _check_keys(l1sec, ["enabled", "As_v", "As_omega", "omega_c_f",
                        "omega_c_M", "Ts", "sat_f", "sat_M"], "l1")
    vsec = dict(raw.get("verify", {}))
    _check_keys(vsec, ["t_f", "dt", "epsilon", "delta", "segments", "seed",
                       "x0", "unsafe"], "verify")
    dt = float(vsec.get("dt", 1e-3))
    try:
        l1p = L1Params(As_v=_vec3(l1sec.get("As_v", -10.0), "As_v"),
                       As_omega=_vec3(l1sec.get("As_omega", -10.0), "As_omega"),
                       omega_c_f=float(l1sec.get("omega_c_f", 15.0)),
                       omega_c_M=float(l1sec.get("omega_c_M", 15.0)),
                       Ts=float(l1sec.get("Ts", dt)),
                       sat_f=float(l1sec.get("sat_f", 0.5 * m0 * g)),
                       sat_M=float(l1sec.get("sat_M", 0.1)))
    except ValueError as e:
        raise ScenarioValidationError(str(e)) from e
    l1_enabled = bool(l1sec.get("enabled", True))

    x0sec = dict(vsec.get("x0") or {})
    _check_keys(x0sec, ["p_half", "v_half", "omega_half"], "verify.x0")
    unsafe = vsec.get("unsafe")
    if unsafe is not None:
        for key, iv in unsafe.items():
            if key not in NAME_TO_INDEX:
                raise ScenarioParseError(f"unknown state name {key!r} in unsafe box")
            if len(iv) != 2 or iv[0] > iv[1]:
                raise ScenarioValidationError(
                    f"unsafe interval for {key!r} must be [lo, hi] with lo <= hi")
        unsafe = {k: [float(v[0]), float(v[1])] for k, v in unsafe.items()}

    return Scenario(
        params=params, gains=gains, ref_spec=ref, mass=mass, tau=tau,
        l1_enabled=l1_enabled, l1p=l1p,
        t_f=float(vsec.get("t_f", 5.0)), dt=dt,
        epsilon=float(vsec.get("epsilon", 0.05)),
        delta=float(vsec.get("delta", 0.01)),
        segments=int(vsec.get("segments", 10)),
        seed=int(vsec.get("seed", 0)),
        p_half=_vec3(x0sec.get("p_half", [0.01, 0.01, 0.01]), "p_half"),
        v_half=_vec3(x0sec.get("v_half", 0.0), "v_half"),
        omega_half=_vec3(x0sec.get("omega_half", 0.0), "omega_half"),
        unsafe=unsafe,
    )


@dataclass
class Trajectory:
    """Uniform-grid closed-loop rollout log.

    Columns per row: t, p(3), v(3), R(9), Omega(3), m, f_cmd, M_cmd(3),
    f_applied, M_applied(3), u_l1(4).
    """

    log: np.ndarray
    scenario: Scenario

    @property
    def t(self):
        return self.log[:, pk.C_T]

    @property
    def states(self):
        """The 19-D black-box state sequence."""
        return self.log[:, pk.STATE_SLICE]

    @property
    def p(self):
        return self.log[:, pk.C_P:pk.C_P + 3]

    def ref_positions(self):
        return reference_positions(self.t, self.scenario.ref_spec)

    def max_z_error(self, t_min=0.0):
        """Peak |z - z_d|, optionally restricted to t >= t_min to skip the
        initial transient."""
        mask = self.t >= t_min
        err = np.abs(self.p[:, 2] - self.ref_positions()[:, 2])
        return float(np.max(err[mask]))


def reference_positions(ts, ref_spec):
    """Vectorized p_d(t) for a reference family."""
    ts = np.asarray(ts, dtype=float)
    fam = ref_spec["family"]
    out = np.empty((ts.size, 3))
    if fam == "hover":
        out[:] = np.asarray(ref_spec["p0"], float)
    elif fam == "circle":
        w = 2.0 * math.pi / ref_spec["period"]
        out[:, 0] = ref_spec["radius"] * np.cos(w * ts)
        out[:, 1] = ref_spec["radius"] * np.sin(w * ts)
        out[:, 2] = ref_spec["altitude"]
    elif fam == "figure8":
        w = 2.0 * math.pi / ref_spec["period"]
        out[:, 0] = ref_spec["a"] * np.sin(w * ts)
        out[:, 1] = ref_spec["b"] * np.sin(2.0 * w * ts)
        out[:, 2] = ref_spec["altitude"]
    else:
        raise ScenarioValidationError(f"unknown family {fam!r}")
    return out


def simulate(sc: Scenario, x0=None, seed=0, backend=None) -> Trajectory:
    """Deterministic closed-loop rollout from x0 (defaults to the X0 center).

    `seed` is reserved for future stochastic disturbance models; the default
    scenarios are fully deterministic.
    """
    kern = default_kernel if backend is None else get_kernel(backend)
    if x0 is None:
        x0 = sc.center_state()
    x0 = np.ascontiguousarray(x0, dtype=float)
    par, family, l1_on, n_adapt, d_steps = sc.pack()
    n = sc.n_steps
    out = np.zeros((n + 1, pk.NCOL))
    rc = kern.run_closed_loop(x0, n, par, family, l1_on, n_adapt, d_steps, out)
    if rc > 0:
        raise SimulationDiverged(f"position norm exceeded 1e3 m at step {rc}")
    if rc < 0:
        raise NonFiniteDerivative(f"non-finite state at step {-rc}")
    return Trajectory(log=out, scenario=sc)


def make_simulator(sc: Scenario, backend=None):
    """Black-box simulator interface for the reachability engine.

    Returns a pure function mapping a 19-vector initial state to the
    (n_steps + 1, 19) array of states on the scenario's time grid.
    """
    def sim(x0):
        return simulate(sc, x0=x0, backend=backend).states.copy()

    return sim
