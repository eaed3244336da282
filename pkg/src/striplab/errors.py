"""Exception hierarchy for striplab.

Every error raised by the library derives from StripLabError so callers can
catch library failures without swallowing programming errors.
"""


class StripLabError(Exception):
    """Base class for all striplab errors."""


class DomainError(StripLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class IntegrabilityError(DomainError):
    """The nonlinearity is not integrable at infinity (tail exponent <= 1)."""


class QuadratureError(StripLabError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class RootFindError(StripLabError):
    """Bracketing or iteration budget exhausted in a scalar root solve."""


class PositivityError(StripLabError, ValueError):
    """A grid function that must be positive has a nonpositive interior value."""


class NonConvergence(StripLabError):
    """Newton iteration exhausted its budget without meeting the tolerance."""


class PositivityLoss(StripLabError):
    """Line search could not keep the iterate above the positivity floor."""


class SingularJacobian(StripLabError):
    """Direct factorization of the Newton system broke down."""


class WindowError(StripLabError, ValueError):
    """A fit/check window contains too few mesh layers or leaves the domain."""


class SignError(StripLabError):
    """A quantity with a theorem-mandated sign violated it."""


class PreconditionError(StripLabError, ValueError):
    """Inputs violate a check's precondition (e.g. wrong residual signs)."""


class ConfigError(StripLabError, ValueError):
    """A scenario configuration is malformed or inconsistent."""
