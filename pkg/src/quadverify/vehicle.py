"""Quadrotor rigid-body dynamics with an augmented mass state, plus RK4 stepping.

Conventions: inertial z points down along e3, so gravity acts along +e3 and the
collective thrust f pushes along -R e3. The simulated state is 19-dimensional:
position (3), velocity (3), rotation matrix (9, row-major), body rates (3) and
the actual (uncertain) vehicle mass (1).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteDerivative
from .geometry import project_to_so3, wedge

E3 = np.array([0.0, 0.0, 1.0])

DEFAULT_M0 = 0.752
DEFAULT_J_DIAG = (0.0025, 0.0021, 0.0043)
DEFAULT_G = 9.81


@dataclass
class VehicleParams:
    """Design-model parameters used by the controller and the plant."""

    m0: float = DEFAULT_M0
    J: np.ndarray = field(default_factory=lambda: np.diag(DEFAULT_J_DIAG))
    g: float = DEFAULT_G
    f_max: float | None = None

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        if self.f_max is None:
            self.f_max = 4.0 * self.m0 * self.g
        if self.m0 <= 0:
            raise ValueError("m0 must be positive")
        if self.g <= 0:
            raise ValueError("g must be positive")
        jd = np.diag(self.J)
        if np.any(jd <= 0) or np.max(np.abs(self.J - np.diag(jd))) > 0:
            raise ValueError("J must be diagonal positive-definite")


@dataclass
class ControlInput:
    """Collective thrust f (N) and body-frame moment M (N m)."""

    f: float
    M: np.ndarray

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)

    def as_array(self):
        return np.array([self.f, self.M[0], self.M[1], self.M[2]])


@dataclass
class QuadState:
    """Rigid-body state plus the augmented actual-mass state."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    m_actual: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.Omega = np.asarray(self.Omega, dtype=float)

    @classmethod
    def hover(cls, p, m):
        return cls(p=np.asarray(p, float), v=np.zeros(3), R=np.eye(3),
                   Omega=np.zeros(3), m_actual=m)

    def as_vector(self):
        """Flatten to the 19-vector [p, v, R (row-major), Omega, m]."""
        return np.concatenate([self.p, self.v, self.R.reshape(9),
                               self.Omega, [self.m_actual]])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(p=x[0:3].copy(), v=x[3:6].copy(), R=x[6:15].reshape(3, 3).copy(),
                   Omega=x[15:18].copy(), m_actual=float(x[18]))


def derivative(x: QuadState, u: ControlInput, m_dot: float,
               params: VehicleParams) -> QuadState:
    """Instantaneous state derivative of the quadrotor EOMs.

    The translational channel uses the *actual* mass carried in the state, not
    the design mass; that mismatch is exactly what the verification exercises.
    """
    m = x.m_actual
    p_dot = x.v
    v_dot = params.g * E3 - u.f * (x.R @ E3) / m
    R_dot = x.R @ wedge(x.Omega)
    Jd = np.diag(params.J)
    Omega_dot = (u.M - np.cross(x.Omega, Jd * x.Omega)) / Jd
    out = QuadState(p=p_dot, v=v_dot, R=R_dot, Omega=Omega_dot, m_actual=m_dot)
    vec = out.as_vector()
    if not np.all(np.isfinite(vec)):
        raise NonFiniteDerivative("non-finite component in state derivative")
    return out


def step(x: QuadState, u: ControlInput, m_dot: float, params: VehicleParams,
         dt: float) -> QuadState:
    """One classical RK4 step followed by SO(3) projection of R.

    The thrust is clamped to [0, f_max] before entering the dynamics and the
    mass rate m_dot is frozen across the four substages.
    """
    f = min(max(u.f, 0.0), params.f_max)
    uc = ControlInput(f=f, M=u.M)
    y0 = x.as_vector()

    def f_of(y):
        return derivative(QuadState.from_vector(y), uc, m_dot, params).as_vector()

    k1 = f_of(y0)
    k2 = f_of(y0 + 0.5 * dt * k1)
    k3 = f_of(y0 + 0.5 * dt * k2)
    k4 = f_of(y0 + dt * k3)
    y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = QuadState.from_vector(y1)
    out.R = project_to_so3(out.R)
    return out
