"""striplab: a numerical laboratory for singular semilinear elliptic problems.

Builds the 1-D solution profiles of -v'' = f(v) on the half-line (classified
by their first-integral constant), solves -Delta u = f(u) on truncated 2-D
strips with zero (regularized) bottom data, and turns the qualitative theory
of such problems (monotonicity, boundary blow-up rates, barriers, comparison
principles, one-dimensional rigidity) into quantitative checks.
"""

from .errors import (
    ConfigError,
    DomainError,
    IntegrabilityError,
    NonConvergence,
    PositivityError,
    PositivityLoss,
    PreconditionError,
    QuadratureError,
    RootFindError,
    SignError,
    SingularJacobian,
    StripLabError,
    WindowError,
)
from .nonlinearity import ConditionFlags, CustomModel, Kind, NonlinearitySpec
from .profile import ProfileParams, ProfileTable

__all__ = [
    "ConditionFlags",
    "ConfigError",
    "CustomModel",
    "DomainError",
    "IntegrabilityError",
    "Kind",
    "NonConvergence",
    "NonlinearitySpec",
    "PositivityError",
    "PositivityLoss",
    "PreconditionError",
    "ProfileParams",
    "ProfileTable",
    "QuadratureError",
    "RootFindError",
    "SignError",
    "SingularJacobian",
    "StripLabError",
    "WindowError",
]

__version__ = "0.1.0"
