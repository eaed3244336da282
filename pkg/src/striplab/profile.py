"""One-dimensional solution profiles of -v'' = f(v), v(0) = 0, v' > 0.

Every positive, increasing solution of the half-line problem carries a first
integral

    (1/2) v'(t)^2 - F(v(t)) = M,   F(s) = int_s^inf f,   M >= 0,

and is recovered from M by inverting

    Phi(v) = int_0^v ds / sqrt(M + F(s)) = sqrt(2) t.

This module evaluates Phi by adaptive quadrature, inverts it by a safeguarded
Newton iteration, and tabulates (t, v, v') profiles.  For the pure power
f(t) = t^(-gamma) the M = 0 member is the explicit solution

    v(t) = K_gamma t^(2/(gamma+1)),
    K_gamma = (gamma+1)^(2/(gamma+1)) / (2 gamma - 2)^(1/(gamma+1)),

exposed as pure_exact(); the one-parameter scaling family
t |-> lam^(-2/(gamma+1)) v(lam t) maps profiles to profiles and multiplies the
first-integral constant by lam^(2(gamma-1)/(gamma+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, QuadratureError, RootFindError
from .nonlinearity import NonlinearitySpec, evaluate, tail_primitive
from .quadrature import adaptive_simpson

#: absolute tolerance for the Phi quadrature
PHI_QUAD_TOL = 1e-10
#: residual tolerance of the Phi inversion, relative to max(1, sqrt(2) t)
INVERT_TOL = 1e-11
#: below this target value of Phi the closed-form small-t asymptotic is used
SMALL_T_CUTOFF = 1e-8
#: default bound on first-integral drift accepted by tabulate()
DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class ProfileParams:
    spec: NonlinearitySpec
    M: float

    def __post_init__(self):
        if self.M < 0:
            raise DomainError(f"first-integral constant must be >= 0, got {self.M}")


@dataclass(frozen=True)
class ProfileTable:
    """Sampled profile (t, v, v') for one first-integral constant.

    Arrays are read-only after construction.  v'(0) is +inf whenever F blows
    up at zero (the boundary gradient genuinely diverges there), so invariant
    checks and the drift are taken over the t > 0 nodes.
    """

    t: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    params: ProfileParams

    def __post_init__(self):
        for name in ("t", "v", "v_prime"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.t.shape != self.v.shape or self.t.shape != self.v_prime.shape:
            raise DomainError("t, v, v_prime must have matching shapes")

    def first_integral_drift(self) -> float:
        """max over t > 0 nodes of |(1/2) v'^2 - F(v) - M|."""
        mask = self.t > 0.0
        if not np.any(mask):
            return 0.0
        F = tail_primitive(self.params.spec, self.v[mask])
        drift = 0.5 * self.v_prime[mask] ** 2 - F - self.params.M
        return float(np.max(np.abs(drift)))

    def interpolator(self) -> PchipInterpolator:
        """Monotone cubic interpolant of v; keeps v' > 0 between nodes."""
        return PchipInterpolator(self.t, self.v)

    def to_csv(self, path) -> None:
        from .io import write_csv_atomic

        write_csv_atomic(path, ("t", "v", "v_prime"), zip(self.t, self.v, self.v_prime))


# ---------------------------------------------------------------------------
# Phi and its inversion
# ---------------------------------------------------------------------------


def _phi_integrand(params: ProfileParams):
    spec, M = params.spec, params.M
    c0, g0 = spec.singular_model()
    singular_at_zero = c0 > 0.0 and g0 >= 1.0

    def h(s: float) -> float:
        if s <= 0.0:
            # limit value: F(0+) = +inf kills the integrand; otherwise F is
            # continuous at 0 and a nearby sample is exact enough for the
            # single endpoint of a shrinking first interval.
            if singular_at_zero:
                return 0.0
            return 1.0 / math.sqrt(M + float(tail_primitive(spec, 1e-9)))
        denom = M + float(tail_primitive(spec, s))
        if denom == 0.0:
            raise QuadratureError("M + F(s) vanished inside the profile integral")
        return 1.0 / math.sqrt(denom)

    return h


def phi(v: float, params: ProfileParams) -> float:
    """Phi(v) = int_0^v ds / sqrt(M + F(s)) by adaptive Simpson.

    The integration is split at the tail-model onset t1 to separate the
    singular-envelope and tail regimes of F.
    """
    if v < 0:
        raise DomainError(f"profile values are nonnegative, got v={v}")
    if v == 0.0:
        return 0.0
    h = _phi_integrand(params)
    _, _, t1 = params.spec.tail_model()
    split = min(float(v), t1)
    total = adaptive_simpson(h, 0.0, split, tol=PHI_QUAD_TOL)
    if v > split:
        total += adaptive_simpson(h, split, float(v), tol=PHI_QUAD_TOL)
    return total


def pure_exact(gamma: float, x):
    """Explicit half-line solution K_gamma x^(2/(gamma+1)) of -v'' = v^(-gamma)."""
    if not gamma > 1:
        raise DomainError(f"the explicit power solution needs gamma > 1, got {gamma}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("x must be nonnegative")
    out = kappa(gamma) * arr ** (2.0 / (gamma + 1.0))
    return out if arr.ndim else float(out)


def kappa(gamma: float) -> float:
    """Coefficient K_gamma of the explicit pure-power solution."""
    if not gamma > 1:
        raise DomainError(f"gamma > 1 required, got {gamma}")
    return (gamma + 1.0) ** (2.0 / (gamma + 1.0)) / (2.0 * gamma - 2.0) ** (
        1.0 / (gamma + 1.0)
    )


def _small_t_asymptotic(t: float, params: ProfileParams) -> float | None:
    """Leading-order v for tiny t, from the declared singularity model.

    Near t = 0 the constant M is dominated by F, so the M = 0 pure-power
    behavior v ~ c0^(1/(g0+1)) K_g0 t^(2/(g0+1)) applies whenever the
    singularity model has exponent > 1.
    """
    c0, g0 = params.spec.singular_model()
    if c0 > 0.0 and g0 > 1.0:
        return c0 ** (1.0 / (g0 + 1.0)) * pure_exact(g0, t)
    return None


def profile_value(t: float, params: ProfileParams) -> float:
    """v(t): the unique value with Phi(v) = sqrt(2) t.

    Bracketing doubles an upper bound seeded by the pure-power growth scale,
    then a Newton iteration with Phi'(v) = 1/sqrt(M + F(v)) and bisection
    safeguard polishes to INVERT_TOL.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    target = math.sqrt(2.0) * t
    if target < SMALL_T_CUTOFF:
        v_asym = _small_t_asymptotic(t, params)
        if v_asym is not None:
            return v_asym

    # bracket [lo, hi] with Phi(hi) >= target
    hi = _small_t_asymptotic(t, params)
    if not hi:
        # no singular growth scale: seed with the linear slope sqrt(2M) or t
        hi = math.sqrt(2.0 * params.M) * t if params.M > 0 else t
    hi = max(hi, 1e-30)
    lo = 0.0
    phi_hi = phi(hi, params)
    expansions = 0
    while phi_hi < target:
        lo = hi
        hi *= 2.0
        phi_hi = phi(hi, params)
        expansions += 1
        if expansions > 200:
            raise RootFindError(f"bracket expansion exceeded bound at t={t}")

    h = _phi_integrand(params)
    v = 0.5 * (lo + hi)
    tol = INVERT_TOL * max(1.0, target)
    for _ in range(200):
        p = phi(v, params)
        if abs(p - target) <= tol:
            return v
        if p < target:
            lo = v
        else:
            hi = v
        step = (target - p) * math.sqrt(
            params.M + float(tail_primitive(params.spec, v))
        )  # Newton: dv = (target - Phi) / Phi'(v)
        v_new = v + step
        if not (lo < v_new < hi):
            v_new = 0.5 * (lo + hi)
        v = v_new
        if hi - lo <= 1e-15 * hi:
            return v
    raise RootFindError(f"Phi inversion stalled at t={t} (params M={params.M})")


def _derivative_from_value(v: float, params: ProfileParams) -> float:
    """First-integral slope sqrt(2 (M + F(v))) at a known profile value v."""
    if v == 0.0:
        c0, g0 = params.spec.singular_model()
        if c0 > 0.0 and g0 >= 1.0:
            return math.inf
        return math.sqrt(2.0 * (params.M + float(tail_primitive(params.spec, 1e-9))))
    return math.sqrt(2.0 * (params.M + float(tail_primitive(params.spec, v))))


def profile_derivative(t: float, params: ProfileParams) -> float:
    """v'(t) = sqrt(2 (M + F(v(t)))); +inf at t = 0 when F blows up."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    return _derivative_from_value(profile_value(t, params), params)


def tabulate(
    params: ProfileParams, t_grid, drift_tol: float = DRIFT_TOL
) -> ProfileTable:
    """Sample (v, v') on t_grid and validate the table invariants.

    Raises QuadratureError if the first-integral drift of the finished table
    exceeds drift_tol, and DomainError on a non-increasing grid.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("t_grid must be a nonempty 1-D array")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be increasing with t_grid[0] >= 0")
    v = np.asarray([profile_value(float(x), params) for x in t])
    vp = np.asarray([_derivative_from_value(float(x), params) for x in v])
    table = ProfileTable(t, v, vp, params)
    pos = t > 0
    if np.any(v[pos] <= 0) or np.any(np.diff(v) <= 0):
        raise DomainError("tabulated profile is not strictly increasing")
    if np.any(vp[pos] <= 0):
        raise DomainError("tabulated profile derivative is not positive")
    drift = table.first_integral_drift()
    if drift > drift_tol:
        raise QuadratureError(
            f"first-integral drift {drift:.3e} exceeds tolerance {drift_tol:.1e}"
        )
    return table


def scaled_family(lam: float, base: ProfileTable) -> ProfileTable:
    """The scaling-family member t |-> lam^(-2/(gamma+1)) v(lam t).

    Only meaningful for pure-power specs (the equation is scale invariant
    there); the first-integral constant becomes lam^(2(gamma-1)/(gamma+1)) M.
    lam = 1 returns the input table unchanged.
    """
    from .nonlinearity import Kind

    if base.params.spec.kind is not Kind.PURE_POWER:
        raise DomainError("scaling family requires a PurePower profile")
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    if lam == 1.0:
        return base
    gamma = base.params.spec.gamma
    a = 2.0 / (gamma + 1.0)
    m_scale = lam ** (2.0 * (gamma - 1.0) / (gamma + 1.0))
    params = replace(base.params, M=base.params.M * m_scale)
    return ProfileTable(
        base.t / lam,
        base.v * lam ** (-a),
        base.v_prime * lam ** (1.0 - a),
        params,
    )


def ode_residual(table: ProfileTable) -> float:
    """Max second-difference defect |(-v(t-h) + 2 v(t) - v(t+h))/h^2 - f(v(t))|.

    Evaluated at interior nodes whose two neighboring spacings agree (uniform
    patches); a convergence diagnostic expected to shrink like h^2.
    """
    t, v = table.t, table.v
    if t.size < 3:
        raise DomainError("need at least 3 nodes for a second difference")
    hl = t[1:-1] - t[:-2]
    hr = t[2:] - t[1:-1]
    uniform = np.abs(hl - hr) <= 1e-9 * np.maximum(hl, hr)
    if not np.any(uniform):
        raise DomainError("no uniform interior window in the table grid")
    h = hl[uniform]
    vm, v0, vp = v[:-2][uniform], v[1:-1][uniform], v[2:][uniform]
    lhs = (-vm + 2.0 * v0 - vp) / h**2
    rhs = evaluate(table.params.spec, v0)
    return float(np.max(np.abs(lhs - rhs)))
