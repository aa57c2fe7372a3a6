"""Exception hierarchy shared across the toolkit."""


class QuadVerifyError(Exception):
    """Base class for all toolkit errors."""


class NotSkewSymmetric(QuadVerifyError):
    """Matrix handed to vee() is not skew-symmetric within tolerance."""


class DegenerateRotation(QuadVerifyError):
    """Matrix cannot be projected to SO(3) (rank-deficient or reflected)."""


class NonFiniteDerivative(QuadVerifyError):
    """Dynamics produced NaN or Inf."""


class DegenerateForce(QuadVerifyError):
    """Desired force vector too small to define an attitude."""


class UnknownFamily(QuadVerifyError):
    """Reference trajectory family name not recognised."""


class NonMonotonicTime(QuadVerifyError):
    """Delay buffer received a timestamp earlier than a previous one."""


class SimulationDiverged(QuadVerifyError):
    """Closed-loop state left the sanity envelope (position norm > 1e3 m)."""


class ContainmentViolation(QuadVerifyError):
    """A training trajectory escaped the reachtube built from it."""


class DegenerateData(QuadVerifyError):
    """Trajectory separations carry no usable signal for fitting."""


class ScenarioParseError(QuadVerifyError):
    """Scenario file is not syntactically valid or has unknown keys."""


class ScenarioValidationError(QuadVerifyError):
    """Scenario violates a declared invariant."""
