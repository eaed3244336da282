"""Catalog of singular nonlinearities f and their envelope data.

The library works with right-hand sides f : (0, inf) -> R that may blow up at
zero, the model being f(t) = c t^(-gamma).  Four shapes are supported:

* PurePower            f(t) = c t^(-gamma)
* PowerPlusPolynomial  f(t) = c t^(-gamma) + g(t),  g a polynomial
* DoublePower          f(t) = c t^(-gamma) + d t^(-beta),  beta > 1
* Custom               a black-box callable with *declared* envelope models

The qualitative theory consumes envelope statements about f (a singular lower
bound near zero, a power upper bound along the tail, a one-sided Lipschitz
constant on bounded ranges), not point values.  A black box cannot reveal its
envelopes, so Custom specs must declare them: a singularity model
f ~ c0 t^(-gamma_sing) near zero and a tail model f <= c1 t^(-gamma_tail)
beyond t1.  Catalog kinds derive all of this analytically.

Key derived quantities:

* tail_primitive  F(s) = integral of f from s to infinity (closed form for
  catalog kinds, quadrature + declared tail remainder for Custom),
* one_sided_lipschitz  the smallest C(M) >= 0 with
  f(s) - f(t) <= C(M)(s - t) for 0 < t <= s <= M,
* classify  hypothesis flags used to decide which checks apply to a spec.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, IntegrabilityError
from .quadrature import adaptive_simpson


class Kind(enum.Enum):
    PURE_POWER = "PurePower"
    POWER_PLUS_POLYNOMIAL = "PowerPlusPolynomial"
    DOUBLE_POWER = "DoublePower"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class CustomModel:
    """Declared envelope data accompanying a black-box callable.

    func is f itself; (sing_coeff, sing_exponent) declare the behavior
    f ~ c0 t^(-gamma_sing) near zero, and (tail_coeff, tail_exponent, t1)
    declare the upper bound f(t) <= c1 t^(-gamma_tail) for t > t1.
    """

    func: Callable[[float], float]
    sing_coeff: float
    sing_exponent: float
    tail_coeff: float
    tail_exponent: float
    t1: float = 1.0


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: Kind
    gamma: float
    c_sing: float = 1.0
    poly_coeffs: tuple[float, ...] = ()
    beta: float = 0.0
    d_sing: float = 0.0
    custom: CustomModel | None = None

    def __post_init__(self):
        if self.kind is not Kind.CUSTOM:
            if not self.gamma > 0:
                raise DomainError(f"gamma must be positive, got {self.gamma}")
            if not self.c_sing > 0:
                raise DomainError(f"c_sing must be positive, got {self.c_sing}")
        if self.kind is Kind.DOUBLE_POWER:
            if not self.beta > 1:
                raise DomainError(f"DoublePower requires beta > 1, got {self.beta}")
            if self.d_sing < 0:
                raise DomainError(f"d_sing must be nonnegative, got {self.d_sing}")
        if self.poly_coeffs and self.kind is not Kind.POWER_PLUS_POLYNOMIAL:
            raise DomainError("poly_coeffs only make sense for PowerPlusPolynomial")
        if self.kind is Kind.CUSTOM and self.custom is None:
            raise DomainError("Custom spec requires a CustomModel")

    # -- convenience constructors -------------------------------------------

    @staticmethod
    def pure_power(gamma: float, c: float = 1.0) -> "NonlinearitySpec":
        return NonlinearitySpec(Kind.PURE_POWER, gamma, c_sing=c)

    @staticmethod
    def power_plus_polynomial(
        gamma: float, coeffs, c: float = 1.0
    ) -> "NonlinearitySpec":
        """coeffs are the polynomial part, lowest degree first."""
        return NonlinearitySpec(
            Kind.POWER_PLUS_POLYNOMIAL, gamma, c_sing=c, poly_coeffs=tuple(coeffs)
        )

    @staticmethod
    def double_power(
        gamma: float, beta: float, c: float = 1.0, d: float = 1.0
    ) -> "NonlinearitySpec":
        return NonlinearitySpec(Kind.DOUBLE_POWER, gamma, c_sing=c, beta=beta, d_sing=d)

    @staticmethod
    def custom(
        func: Callable[[float], float],
        sing_coeff: float,
        sing_exponent: float,
        tail_coeff: float,
        tail_exponent: float,
        t1: float = 1.0,
    ) -> "NonlinearitySpec":
        model = CustomModel(func, sing_coeff, sing_exponent, tail_coeff, tail_exponent, t1)
        return NonlinearitySpec(Kind.CUSTOM, gamma=sing_exponent, custom=model)

    # -- envelope models ------------------------------------------------------

    def singular_model(self) -> tuple[float, float]:
        """(coefficient, exponent) of the dominant power of f as t -> 0+."""
        if self.kind is Kind.CUSTOM:
            return self.custom.sing_coeff, self.custom.sing_exponent
        if self.kind is Kind.DOUBLE_POWER:
            if self.beta > self.gamma:
                return self.d_sing, self.beta
            if self.beta == self.gamma:
                return self.c_sing + self.d_sing, self.gamma
        return self.c_sing, self.gamma

    def tail_model(self) -> tuple[float, float, float]:
        """(coefficient, exponent, t1) of a power upper bound on f for t > t1.

        Raises IntegrabilityError for kinds whose tail is not a decaying power
        (a nonzero polynomial part).
        """
        if self.kind is Kind.PURE_POWER:
            return self.c_sing, self.gamma, 1.0
        if self.kind is Kind.DOUBLE_POWER:
            return self.c_sing + self.d_sing, min(self.gamma, self.beta), 1.0
        if self.kind is Kind.POWER_PLUS_POLYNOMIAL:
            if any(c != 0.0 for c in self.poly_coeffs):
                raise IntegrabilityError(
                    "polynomial part does not decay; no power tail model"
                )
            return self.c_sing, self.gamma, 1.0
        return self.custom.tail_coeff, self.custom.tail_exponent, self.custom.t1

    def to_config(self) -> dict:
        """Serializable form used by scenario configs (catalog kinds only)."""
        if self.kind is Kind.CUSTOM:
            raise DomainError("Custom specs are not serializable")
        cfg: dict = {"kind": self.kind.value, "gamma": self.gamma, "c_sing": self.c_sing}
        if self.kind is Kind.POWER_PLUS_POLYNOMIAL:
            cfg["poly_coeffs"] = list(self.poly_coeffs)
        if self.kind is Kind.DOUBLE_POWER:
            cfg["beta"] = self.beta
            cfg["d_sing"] = self.d_sing
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "NonlinearitySpec":
        from .errors import ConfigError

        allowed = {"kind", "gamma", "c_sing", "poly_coeffs", "beta", "d_sing"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown nonlinearity keys: {sorted(unknown)}")
        try:
            kind = Kind(cfg["kind"])
        except (KeyError, ValueError):
            raise ConfigError(f"bad nonlinearity kind: {cfg.get('kind')!r}") from None
        if kind is Kind.CUSTOM:
            raise ConfigError("Custom nonlinearities cannot be configured from JSON")
        try:
            return NonlinearitySpec(
                kind,
                float(cfg["gamma"]),
                c_sing=float(cfg.get("c_sing", 1.0)),
                poly_coeffs=tuple(float(c) for c in cfg.get("poly_coeffs", ())),
                beta=float(cfg.get("beta", 0.0)),
                d_sing=float(cfg.get("d_sing", 0.0)),
            )
        except (KeyError, TypeError, DomainError) as exc:
            raise ConfigError(f"bad nonlinearity config: {exc}") from None


@dataclass(frozen=True)
class ConditionFlags:
    """Which structural hypotheses a spec satisfies.

    None means "unknown": sampling a black box was inconclusive.
    lipschitz_constants maps each requested bound M to the estimated C(M).
    """

    satisfies_F: bool | None
    lipschitz_constants: dict = field(default_factory=dict)
    near_zero_superlinear: bool | None = None
    global_singular_lower: bool | None = None
    tail_bound: bool | None = None
    globally_nonincreasing: bool | None = None


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------


def _pow(t, p):
    """t**p for positive t, tolerating overflow to +inf (numpy semantics)."""
    with np.errstate(over="ignore", divide="ignore"):
        return np.power(t, p)


def evaluate(spec: NonlinearitySpec, t):
    """f(t) for t > 0 (scalar or array).  Raises DomainError for t <= 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("f is only defined for finite t > 0")
    if spec.kind is Kind.PURE_POWER:
        out = spec.c_sing * _pow(arr, -spec.gamma)
    elif spec.kind is Kind.POWER_PLUS_POLYNOMIAL:
        out = spec.c_sing * _pow(arr, -spec.gamma) + P.polyval(arr, spec.poly_coeffs)
    elif spec.kind is Kind.DOUBLE_POWER:
        out = spec.c_sing * _pow(arr, -spec.gamma) + spec.d_sing * _pow(arr, -spec.beta)
    else:
        f = spec.custom.func
        out = np.asarray(
            [f(x) for x in arr.ravel()], dtype=float
        ).reshape(arr.shape)
    return out if arr.ndim else float(out)


def derivative(spec: NonlinearitySpec, t):
    """f'(t): analytic for catalog kinds, central difference for Custom."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("f' is only defined for t > 0")
    if spec.kind is Kind.CUSTOM:
        h = np.maximum(1e-6 * arr, 1e-12)
        out = (evaluate(spec, arr + h) - evaluate(spec, np.maximum(arr - h, arr * 0.5))) / (
            arr + h - np.maximum(arr - h, arr * 0.5)
        )
        return out if arr.ndim else float(out)
    out = -spec.gamma * spec.c_sing * _pow(arr, -spec.gamma - 1.0)
    if spec.kind is Kind.POWER_PLUS_POLYNOMIAL and spec.poly_coeffs:
        out = out + P.polyval(arr, P.polyder(spec.poly_coeffs))
    elif spec.kind is Kind.DOUBLE_POWER:
        out = out - spec.beta * spec.d_sing * _pow(arr, -spec.beta - 1.0)
    return out if arr.ndim else float(out)


# ---------------------------------------------------------------------------
# Tail primitive F(s) = int_s^inf f
# ---------------------------------------------------------------------------

#: split-point multiplier for Custom quadrature: integrate numerically on
#: [s, max(t1, 10 s)] and close with the declared tail in closed form.
_TAIL_SPLIT_FACTOR = 10.0
_TAIL_QUAD_TOL = 1e-10


def tail_primitive(spec: NonlinearitySpec, s):
    """F(s) = integral of f over [s, inf); requires a tail exponent > 1."""
    coeff, expo, t1 = spec.tail_model()
    if expo <= 1.0:
        raise IntegrabilityError(f"tail exponent {expo} <= 1: F diverges")
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("F is only defined for s > 0")
    if spec.kind is Kind.PURE_POWER or (
        spec.kind is Kind.POWER_PLUS_POLYNOMIAL  # only reachable with g == 0
    ):
        out = spec.c_sing * _pow(arr, 1.0 - spec.gamma) / (spec.gamma - 1.0)
    elif spec.kind is Kind.DOUBLE_POWER:
        out = spec.c_sing * _pow(arr, 1.0 - spec.gamma) / (spec.gamma - 1.0) + (
            spec.d_sing * _pow(arr, 1.0 - spec.beta) / (spec.beta - 1.0)
        )
    else:
        f = spec.custom.func
        tail = lambda T: coeff * T ** (1.0 - expo) / (expo - 1.0)

        def one(x: float) -> float:
            T = max(t1, _TAIL_SPLIT_FACTOR * x)
            return adaptive_simpson(f, x, T, tol=_TAIL_QUAD_TOL) + tail(T)

        out = np.asarray([one(x) for x in arr.ravel()]).reshape(arr.shape)
    return out if arr.ndim else float(out)


# ---------------------------------------------------------------------------
# One-sided Lipschitz constant C(M)
# ---------------------------------------------------------------------------


def one_sided_lipschitz(spec: NonlinearitySpec, M: float) -> float:
    """Smallest C >= 0 with f(s) - f(t) <= C (s - t) on 0 < t <= s <= M.

    Catalog kinds: the singular powers are decreasing and contribute nothing,
    so C(M) is the positive part of the polynomial derivative's maximum on
    [0, M] (exact, via critical points).  Custom: supremum of clipped
    difference quotients on a geometric grid, refined until stable.
    """
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    if spec.kind in (Kind.PURE_POWER, Kind.DOUBLE_POWER):
        return 0.0
    if spec.kind is Kind.POWER_PLUS_POLYNOMIAL:
        if not spec.poly_coeffs or len(spec.poly_coeffs) == 1:
            return 0.0  # constant polynomial part
        gp = P.polyder(spec.poly_coeffs)
        candidates = [0.0, float(M)]
        if len(gp) > 1:
            roots = P.polyroots(P.polyder(gp))
            candidates += [float(r.real) for r in roots if abs(r.imag) < 1e-12 and 0.0 < r.real < M]
        return max(0.0, max(float(P.polyval(x, gp)) for x in candidates))
    return _sampled_lipschitz(spec, M)


def _sampled_lipschitz(spec: NonlinearitySpec, M: float, rel_change: float = 0.01) -> float:
    n = 512
    prev = None
    while n <= 65536:
        grid = np.geomspace(M * 1e-9, M, n)
        vals = evaluate(spec, grid)
        quot = np.diff(vals) / np.diff(grid)
        est = max(0.0, float(np.max(quot)))
        if prev is not None and abs(est - prev) <= rel_change * max(prev, 1e-300):
            return est
        prev = est
        n *= 2
    return prev


# ---------------------------------------------------------------------------
# Hypothesis classification
# ---------------------------------------------------------------------------


def default_probe_grid() -> np.ndarray:
    return np.geomspace(1e-6, 1e3, 512)


def classify(
    spec: NonlinearitySpec,
    probe_grid: np.ndarray | None = None,
    lipschitz_bounds: tuple[float, ...] = (1.0, 10.0),
) -> ConditionFlags:
    """Evaluate the structural hypothesis flags for a spec.

    Catalog kinds are decided analytically where possible and by sampling the
    analytic derivative otherwise; Custom kinds are decided by sampling alone
    and may come back None (unknown) when the samples are not finite.
    """
    grid = default_probe_grid() if probe_grid is None else np.asarray(probe_grid, float)
    if grid.ndim != 1 or grid.size < 8 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("probe_grid must be an increasing positive grid")

    lipschitz = {float(M): one_sided_lipschitz(spec, float(M)) for M in lipschitz_bounds}

    if spec.kind is Kind.PURE_POWER or spec.kind is Kind.DOUBLE_POWER:
        return ConditionFlags(
            satisfies_F=True,
            lipschitz_constants=lipschitz,
            near_zero_superlinear=True,
            global_singular_lower=True,
            tail_bound=True,
            globally_nonincreasing=True,
        )

    if spec.kind is Kind.POWER_PLUS_POLYNOMIAL:
        g_nonzero = any(c != 0.0 for c in spec.poly_coeffs)
        if all(c >= 0.0 for c in spec.poly_coeffs):
            singular_lower = True
        else:
            singular_lower = bool(
                np.min(evaluate(spec, grid) * grid**spec.gamma) > 0.0
            )
        nonincreasing = bool(np.all(derivative(spec, grid) <= 0.0))
        return ConditionFlags(
            satisfies_F=True,
            lipschitz_constants=lipschitz,
            near_zero_superlinear=True,  # the singular part dominates near zero
            global_singular_lower=singular_lower,
            tail_bound=not g_nonzero,
            globally_nonincreasing=nonincreasing,
        )

    return _classify_custom(spec, grid, lipschitz)


def _classify_custom(spec, grid, lipschitz) -> ConditionFlags:
    vals = evaluate(spec, grid)
    if not np.all(np.isfinite(vals)):
        return ConditionFlags(satisfies_F=None, lipschitz_constants=lipschitz)

    sat_F = all(np.isfinite(c) for c in lipschitz.values()) or None

    low = grid <= grid[0] * 10.0
    ratios = vals[low] / grid[low]
    near_zero = bool(np.all(ratios > 0.0)) if ratios.size else None

    c0, gs = spec.singular_model()
    weighted = vals * grid**gs
    singular_lower = bool(np.min(weighted) > 0.0)

    c1, gt, t1 = spec.custom.tail_coeff, spec.custom.tail_exponent, spec.custom.t1
    tail = grid > t1
    if np.any(tail):
        tv, tg = vals[tail], grid[tail]
        tail_monotone = bool(np.all(np.diff(tv) <= 1e-14 * np.abs(tv[:-1])))
        tail_env = bool(np.all(tv * tg**gt <= c1 * (1.0 + 1e-9)))
        tail_flag = tail_monotone and tail_env
    else:
        tail_flag = None

    nonincr = bool(np.all(np.diff(vals) <= 1e-14 * np.abs(vals[:-1])))
    if nonincr and tail_flag is False:
        # a globally nonincreasing sample cannot contradict tail monotonicity
        tail_flag = bool(np.all(vals[tail] * grid[tail] ** gt <= c1 * (1.0 + 1e-9)))

    return ConditionFlags(
        satisfies_F=sat_F,
        lipschitz_constants=lipschitz,
        near_zero_superlinear=near_zero,
        global_singular_lower=singular_lower,
        tail_bound=tail_flag,
        globally_nonincreasing=nonincr,
    )
