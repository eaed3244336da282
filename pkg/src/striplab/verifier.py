"""Quantitative checks of the qualitative theory on computed solutions.

Each check consumes a Field (2-D strip solution) or a ProfileTable and returns
a CheckReport: a pass/fail verdict plus the fitted exponents, envelope
constants, and worst violations that justify it.  The checks cover

* strict monotonicity in the vertical direction,
* the reflection inequality u(x1, xN) <= u(x1, 2 lvl - xN) below a level,
* the boundary growth law u ~ xN^(2/(gamma+1)) (log-log fit),
* the directional-derivative blow-up law d_eta u ~ xN^((1-gamma)/(gamma+1)),
* pointwise lower bounds min{C xN^(2/(gamma+1)), t0} and min{C xN, t0},
* one-dimensional rigidity (horizontal oscillation + best-fit profile),
* recovery of the first-integral constant from a solution,
* self-consistency of the boundary rescaling u -> eps^(-2/(g+1)) u(eps x).

Fits are taken on windows [lo, hi] that exclude both the regularization
plateau near the bottom (lo >= max(5 delta, third mesh layer)) and the
truncation-affected top (hi <= lam/4 by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, SignError, WindowError
from .nonlinearity import NonlinearitySpec, Kind, evaluate, tail_primitive
from .profile import ProfileParams, ProfileTable, profile_value
from .strip_solver import BoundaryData, Field, assemble_residual, build_mesh

#: absolute tolerance on fitted exponents (log-log regression noise at desk
#: resolution, calibrated on the exact power law plus one refinement)
EXPONENT_TOL = 0.05
#: smallest admissible lower-bound constant (above floating-point noise)
LOWER_BOUND_FLOOR = 1e-8
#: multiplier on the local fourth-difference interpolation-error estimate
INTERP_TOL_FACTOR = 10.0


@dataclass
class CheckReport:
    check_name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"check_name": self.check_name, "passed": bool(self.passed), "details": self.details}


@dataclass(frozen=True)
class DirectionVector:
    """Unit direction (cos theta, sin theta) with theta in (0, pi).

    The vertical component sin(theta) must stay above beta_min > 0: the
    blow-up law holds uniformly only for directions bounded away from the
    horizontal.
    """

    theta: float
    beta_min: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"theta must lie in (0, pi), got {self.theta}")
        if math.sin(self.theta) < self.beta_min:
            raise DomainError("vertical component sin(theta) is below beta_min")

    @property
    def components(self) -> tuple[float, float]:
        return math.cos(self.theta), math.sin(self.theta)


VERTICAL = DirectionVector(math.pi / 2.0)
DIAGONAL = DirectionVector(math.pi / 4.0)

FieldOrProfile = Union[Field, ProfileTable]


# ---------------------------------------------------------------------------
# window plumbing
# ---------------------------------------------------------------------------


def default_window(field: Field) -> tuple[float, float]:
    """[max(5 delta_final, third mesh layer), lam/4]."""
    xN = build_mesh(field.domain).xN
    lo = max(5.0 * field.bottom_delta, xN[3])
    return lo, field.domain.lam / 4.0


def _window_rows(xN: np.ndarray, window: tuple[float, float], min_layers: int = 6):
    lo, hi = window
    rows = np.nonzero((xN >= lo) & (xN <= hi))[0]
    rows = rows[(rows > 0) & (rows < xN.size - 1)]
    if rows.size < min_layers:
        raise WindowError(
            f"window [{lo:g}, {hi:g}] contains {rows.size} mesh layers (< {min_layers})"
        )
    return rows


def _contamination_floor(delta: float, gamma: float) -> float:
    """Height below which the bottom regularization plateau distorts fits."""
    return 10.0 * delta ** ((gamma + 1.0) / 2.0)


def _fourth_difference_scale(col: np.ndarray) -> float:
    """Max |fourth difference| along a sampled column; an interpolation-error
    and truncation proxy for cubic interpolants on smooth data."""
    if col.size < 5:
        return 0.0
    d4 = np.abs(np.diff(col, n=4))
    return float(np.max(d4)) if d4.size else 0.0


def _divided_differences(x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    """Newton divided differences y[x_i..x_{i+order}] along the last axis."""
    dd = np.asarray(y, dtype=float)
    for k in range(1, order + 1):
        dd = (dd[..., 1:] - dd[..., :-1]) / (x[k:] - x[:-k])
    return dd


def truncation_estimate(xN: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-node estimate of the vertical stencil's truncation error.

    The nonuniform three-point second difference carries the defect
    (h+ - h-)/3 u''' + O(h^2) u''''; the derivatives are estimated from
    third/fourth divided differences of the sampled columns.  Returns an
    array over interior rows (matching values[:, 1:-1]), conservative where
    the column has fewer than five samples.
    """
    values = np.atleast_2d(values)
    n = xN.size
    if n < 5:
        return np.full((values.shape[0], n - 2), np.inf)
    hm = xN[1:-1] - xN[:-2]
    hp = xN[2:] - xN[1:-1]
    d3 = 6.0 * np.abs(_divided_differences(xN, values, 3))  # ~ |u'''| on x[i..i+3]
    d4 = 24.0 * np.abs(_divided_differences(xN, values, 4))  # ~ |u''''| on x[i..i+4]
    # map stencil windows onto interior rows j = 1..n-2
    u3 = np.zeros((values.shape[0], n - 2))
    u4 = np.zeros_like(u3)
    for j in range(1, n - 1):
        lo3, hi3 = max(0, j - 2), min(d3.shape[-1] - 1, j - 1)
        u3[:, j - 1] = np.max(d3[:, lo3 : hi3 + 1], axis=-1)
        lo4, hi4 = max(0, j - 2), min(d4.shape[-1] - 1, j - 2)
        if hi4 >= lo4:
            u4[:, j - 1] = np.max(d4[:, lo4 : hi4 + 1], axis=-1)
    return np.abs(hp - hm) / 3.0 * u3 + (hm**2 + hp**2) / 12.0 * u4


# ---------------------------------------------------------------------------
# monotonicity and moving planes
# ---------------------------------------------------------------------------


def check_monotone_xn(field: Field, row_fraction: float = 0.9) -> CheckReport:
    """Strictly positive vertical forward differences on the lower rows.

    Only the lower `row_fraction` of the strip is examined: the top rows feel
    the artificial truncation boundary, which the half-space statement does
    not constrain.
    """
    field.validate()
    ny = field.domain.ny
    jmax = max(2, int(math.floor(row_fraction * ny)))
    diffs = np.diff(field.values[:, : jmax + 1], axis=1)
    k = np.unravel_index(np.argmin(diffs), diffs.shape)
    mesh = build_mesh(field.domain)
    min_diff = float(diffs[k])
    return CheckReport(
        "monotone_xn",
        passed=min_diff > 0.0,
        details={
            "min_forward_difference": min_diff,
            "at_x1": float(mesh.x1[k[0]]),
            "at_xN": float(mesh.xN[k[1]]),
            "rows_checked": jmax,
        },
    )


def moving_plane_check(field: Field, lambda_levels) -> CheckReport:
    """Reflection inequality u(x1, xN) <= u(x1, 2 lvl - xN) for xN < lvl.

    Off-lattice reflected heights are evaluated with the monotone cubic
    interpolant of each column; an interpolation allowance of
    INTERP_TOL_FACTOR x (local fourth-difference estimate) guards against
    spurious failures from interpolation error.
    """
    field.validate()
    mesh = build_mesh(field.domain)
    xN, lam = mesh.xN, field.domain.lam
    levels = [float(l) for l in np.atleast_1d(lambda_levels)]
    per_level = []
    worst = -math.inf
    for lvl in levels:
        if not 0.0 < lvl < lam:
            raise DomainError(f"reflection level {lvl} outside (0, {lam})")
        # reflected points must stay inside the strip
        below = (xN < lvl) & (2.0 * lvl - xN <= lam)
        if not np.any(below):
            per_level.append({"level": lvl, "checked": 0, "max_violation": 0.0})
            continue
        refl = 2.0 * lvl - xN[below]
        violation = -math.inf
        for i in range(field.values.shape[0]):
            col = field.values[i]
            tol = INTERP_TOL_FACTOR * _fourth_difference_scale(col)
            mirrored = PchipInterpolator(xN, col)(refl)
            violation = max(violation, float(np.max(col[below] - mirrored - tol)))
        per_level.append(
            {"level": lvl, "checked": int(np.sum(below)), "max_violation": violation}
        )
        worst = max(worst, violation)
    return CheckReport(
        "moving_plane",
        passed=worst <= 0.0,
        details={"levels": per_level, "max_violation": worst},
    )


# ---------------------------------------------------------------------------
# blow-up exponent fits
# ---------------------------------------------------------------------------


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def fit_boundary_exponent(
    obj: FieldOrProfile,
    spec: NonlinearitySpec,
    window: tuple[float, float] | None = None,
    tol: float = EXPONENT_TOL,
) -> CheckReport:
    """Fit u ~ C xN^alpha near the bottom; expect alpha = 2/(gamma+1).

    Reports the fitted alpha (averaged over x1 for fields), the envelope
    constants c, C of u / xN^(2/(gamma+1)) over the window, and flags windows
    that dip into the regularization plateau as contaminated.
    """
    target = 2.0 / (spec.gamma + 1.0)
    if isinstance(obj, ProfileTable):
        t, v = obj.t, obj.v
        lo, hi = window if window else (t[t > 0][2], t[-1] / 4.0)
        rows = np.nonzero((t >= lo) & (t <= hi) & (t > 0))[0]
        if rows.size < 6:
            raise WindowError(f"window [{lo:g}, {hi:g}] has {rows.size} samples (< 6)")
        alpha = _loglog_slope(t[rows], v[rows])
        ratio = v[rows] / t[rows] ** target
        contaminated = False
        delta = 0.0
    else:
        obj.validate()
        mesh = build_mesh(obj.domain)
        win = window if window else default_window(obj)
        rows = _window_rows(mesh.xN, win)
        slopes = [
            _loglog_slope(mesh.xN[rows], obj.values[i, rows])
            for i in range(obj.values.shape[0])
        ]
        alpha = float(np.mean(slopes))
        ratio = (obj.values[:, rows] / mesh.xN[rows] ** target).ravel()
        delta = obj.bottom_delta
        contaminated = win[0] < _contamination_floor(delta, spec.gamma)
    deviation = abs(alpha - target)
    passed = deviation <= tol and not contaminated
    details = {
        "fitted_exponent": alpha,
        "target_exponent": target,
        "deviation": deviation,
        "tolerance": tol,
        "envelope_c": float(np.min(ratio)),
        "envelope_C": float(np.max(ratio)),
    }
    if contaminated:
        details["window_contaminated"] = (
            f"window starts below 10*delta^((gamma+1)/2) = "
            f"{_contamination_floor(delta, spec.gamma):.3e}"
        )
    return CheckReport("boundary_exponent", passed, details)


def _gradient_components(field: Field):
    """(d_x1 u, d_xN u, interior heights) by centered differences.

    The vertical part uses the nonuniform three-point first-derivative
    formula, second-order accurate on smoothly graded meshes.
    """
    mesh = build_mesh(field.domain)
    u = field.values
    xN = mesh.xN
    hm = (xN[1:-1] - xN[:-2])[None, :]
    hp = (xN[2:] - xN[1:-1])[None, :]
    dn = (
        -hp / (hm * (hm + hp)) * u[:, :-2]
        + (hp - hm) / (hm * hp) * u[:, 1:-1]
        + hm / (hp * (hm + hp)) * u[:, 2:]
    )
    if field.periodic:
        nw = field.domain.nx - 1
        cols = np.arange(nw)
        d1 = (u[(cols + 1) % nw][:, 1:-1] - u[(cols - 1) % nw][:, 1:-1]) / (2 * mesh.dx)
        dn = dn[cols]
    else:
        cols = np.arange(1, field.domain.nx - 1)
        d1 = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * mesh.dx)
        dn = dn[cols]
    return d1, dn, xN[1:-1]


def fit_gradient_exponent(
    obj: FieldOrProfile,
    direction: DirectionVector,
    spec: NonlinearitySpec,
    window: tuple[float, float] | None = None,
    tol: float = EXPONENT_TOL,
) -> CheckReport:
    """Fit d_eta u ~ xN^sigma near the bottom; expect sigma = (1-gamma)/(gamma+1).

    Raises SignError if the directional derivative is nonpositive anywhere in
    the window (it must be positive for upward-pointing directions).  The
    envelope constants of d_eta u / xN^sigma are reported but not asserted
    beyond positivity and finiteness; the full-gradient-magnitude slope is
    reported as a consistency extra.
    """
    target = (1.0 - spec.gamma) / (spec.gamma + 1.0)
    if isinstance(obj, ProfileTable):
        _, cN = direction.components
        t, vp = obj.t, obj.v_prime
        lo, hi = window if window else (t[t > 0][2], t[-1] / 4.0)
        mask = (t >= lo) & (t <= hi) & (t > 0) & np.isfinite(vp)
        if np.sum(mask) < 6:
            raise WindowError("too few profile samples in the window")
        deriv = cN * vp[mask]
        heights = t[mask]
        if np.any(deriv <= 0):
            raise SignError("directional derivative is nonpositive in the window")
        slope = _loglog_slope(heights, deriv)
        grad_slope = _loglog_slope(heights, vp[mask])
        ratio = deriv / heights**target
    else:
        obj.validate()
        win = window if window else default_window(obj)
        d1, dn, xNi = _gradient_components(obj)
        rows = _window_rows(xNi, win, min_layers=6)
        c1, cN = direction.components
        sel = (c1 * d1 + cN * dn)[:, rows]
        if np.any(sel <= 0):
            raise SignError("directional derivative is nonpositive in the window")
        heights = xNi[rows]
        slopes = [_loglog_slope(heights, sel[i]) for i in range(sel.shape[0])]
        slope = float(np.mean(slopes))
        grad_mag = np.sqrt(d1**2 + dn**2)[:, rows]
        grad_slope = float(
            np.mean([_loglog_slope(heights, grad_mag[i]) for i in range(grad_mag.shape[0])])
        )
        ratio = (sel / heights**target).ravel()
    c1v, c2v = float(np.min(ratio)), float(np.max(ratio))
    deviation = abs(slope - target)
    passed = (
        deviation <= tol and c1v > 0.0 and math.isfinite(c1v) and math.isfinite(c2v)
    )
    return CheckReport(
        "gradient_exponent",
        passed,
        details={
            "fitted_exponent": slope,
            "target_exponent": target,
            "deviation": deviation,
            "tolerance": tol,
            "direction_theta": direction.theta,
            "envelope_c1": c1v,
            "envelope_c2": c2v,
            "gradient_magnitude_exponent": grad_slope,
        },
    )


# ---------------------------------------------------------------------------
# lower bounds
# ---------------------------------------------------------------------------


def check_lower_bounds(
    field: Field,
    spec: NonlinearitySpec,
    t0_power: float = math.inf,
    t0_linear: float = math.inf,
) -> CheckReport:
    """Largest constants C in u >= min{C xN^(2/(gamma+1)), t0} and
    u >= min{C xN, t0}; both must clear the floating-point noise floor.

    The power bound applies under the global singular lower envelope, the
    linear bound under near-zero superlinearity; the caps t0 restrict which
    nodes constrain C (nodes with u >= t0 are already covered by the min).
    """
    field.validate()
    mesh = build_mesh(field.domain)
    u = field.values[:, 1:]
    xN = mesh.xN[1:]
    a = 2.0 / (spec.gamma + 1.0)

    def largest_constant(weights: np.ndarray, cap: float) -> float:
        ratios = u / weights[None, :]
        active = u < cap
        return float(np.min(ratios[active]) if np.any(active) else np.min(ratios))

    c_power = largest_constant(xN**a, t0_power)
    c_linear = largest_constant(xN, t0_linear)
    passed = c_power >= LOWER_BOUND_FLOOR and c_linear >= LOWER_BOUND_FLOOR
    return CheckReport(
        "lower_bounds",
        passed,
        details={
            "power_constant": c_power,
            "linear_constant": c_linear,
            "power_exponent": a,
            "floor": LOWER_BOUND_FLOOR,
            "t0_power": t0_power,
            "t0_linear": t0_linear,
        },
    )


# ---------------------------------------------------------------------------
# rigidity and the first integral
# ---------------------------------------------------------------------------


def estimate_M(
    obj: FieldOrProfile,
    spec: NonlinearitySpec,
    window: tuple[float, float] | None = None,
) -> float:
    """Median of (1/2)(d_N u)^2 - F(u) over sample heights.

    For a table the stored derivative is used; for a field the horizontal
    average is differentiated with the nonuniform centered formula.  For a
    true profile this recovers the first-integral constant; a constant field
    lands at -F(c) < 0, flagging itself as a non-profile.
    """
    if isinstance(obj, ProfileTable):
        mask = (obj.t > 0) & np.isfinite(obj.v_prime)
        if window is not None:
            mask &= (obj.t >= window[0]) & (obj.t <= window[1])
        v, vp = obj.v[mask], obj.v_prime[mask]
        F = tail_primitive(spec, v)
        return float(np.median(0.5 * vp**2 - F))
    obj.validate()
    mesh = build_mesh(obj.domain)
    xN = mesh.xN
    ubar = obj.values.mean(axis=0)
    hm = xN[1:-1] - xN[:-2]
    hp = xN[2:] - xN[1:-1]
    dn = (
        -hp / (hm * (hm + hp)) * ubar[:-2]
        + (hp - hm) / (hm * hp) * ubar[1:-1]
        + hm / (hp * (hm + hp)) * ubar[2:]
    )
    lo, hi = window if window else (obj.domain.lam / 4.0, 3.0 * obj.domain.lam / 4.0)
    rows = (xN[1:-1] >= lo) & (xN[1:-1] <= hi)
    if not np.any(rows):
        raise WindowError(f"no interior rows in window [{lo:g}, {hi:g}]")
    F = tail_primitive(spec, ubar[1:-1][rows])
    return float(np.median(0.5 * dn[rows] ** 2 - F))


def rigidity_deviation(
    field: Field,
    params: ProfileParams,
    oscillation_tol: float,
    max_height_fraction: float = 1.0,
) -> CheckReport:
    """Horizontal oscillation of the field and distance to the best-fit profile.

    A solution satisfying the one-dimensional-symmetry hypotheses must be a
    function of xN alone: the oscillation max_x1 u - min_x1 u of every row
    (up to max_height_fraction of the strip) must stay within tolerance.  The
    report also carries sup |ubar - v_Mhat| where Mhat is the first-integral
    constant recovered from the horizontal average.
    """
    field.validate()
    mesh = build_mesh(field.domain)
    xN = mesh.xN
    vals = field.values[:-1] if field.periodic else field.values
    osc = vals.max(axis=0) - vals.min(axis=0)
    jcap = np.nonzero(xN <= max_height_fraction * field.domain.lam)[0]
    osc_max = float(np.max(osc[jcap]))

    m_hat = estimate_M(field, params.spec)
    fitted = ProfileParams(params.spec, max(m_hat, 0.0))
    rows = np.arange(1, field.domain.ny)  # compare away from the pinned rows
    ubar = field.values.mean(axis=0)
    vfit = np.asarray([profile_value(float(t), fitted) for t in xN[rows]])
    profile_dev = float(np.max(np.abs(ubar[rows] - vfit)))

    return CheckReport(
        "rigidity",
        passed=osc_max <= oscillation_tol,
        details={
            "oscillation_max": osc_max,
            "oscillation_tol": oscillation_tol,
            "max_height_fraction": max_height_fraction,
            "m_hat": m_hat,
            "m_declared": params.M,
            "profile_deviation": profile_dev,
            "is_profile_like": m_hat >= -oscillation_tol,
        },
    )


# ---------------------------------------------------------------------------
# boundary rescaling self-consistency
# ---------------------------------------------------------------------------


def _rescaled_spec(spec: NonlinearitySpec, eps: float) -> NonlinearitySpec:
    """The nonlinearity solved by w = eps^(-2/(g+1)) u(eps x).

    The leading singular power is scale invariant; a polynomial part g picks
    up the factor eps^(2 gamma/(gamma+1)) g(eps^(2/(gamma+1)) w), which is
    again a polynomial; a secondary power t^(-beta) scales by
    eps^(2(gamma-beta)/(gamma+1)).
    """
    g = spec.gamma
    a = 2.0 / (g + 1.0)
    if spec.kind is Kind.PURE_POWER:
        return spec
    if spec.kind is Kind.POWER_PLUS_POLYNOMIAL:
        coeffs = tuple(
            ck * eps ** ((2.0 * g + 2.0 * k) / (g + 1.0))
            for k, ck in enumerate(spec.poly_coeffs)
        )
        return NonlinearitySpec.power_plus_polynomial(g, coeffs, c=spec.c_sing)
    if spec.kind is Kind.DOUBLE_POWER:
        d = spec.d_sing * eps ** (2.0 * (g - spec.beta) / (g + 1.0))
        return NonlinearitySpec.double_power(g, spec.beta, c=spec.c_sing, d=d)
    raise DomainError("rescale_check supports catalog nonlinearities only")


def rescale_check(
    field: Field,
    epsilon: float,
    spec: NonlinearitySpec,
    window: tuple[float, float] | None = None,
    budget: float | None = None,
) -> CheckReport:
    """Residual of the rescaled field against the transformed equation.

    Builds w(x) = eps^(-2/(gamma+1)) u(eps x) by monotone cubic interpolation
    on the same mesh and checks its discrete residual against the transformed
    nonlinearity on the window rows.  The default budget is
    10 x (original residual + fourth-difference truncation estimate), i.e.
    the defect must stay within the discretization + interpolation noise.
    """
    if not 0.0 < epsilon <= 1.0:
        raise WindowError(f"epsilon must lie in (0, 1], got {epsilon}")
    field.validate()
    mesh = build_mesh(field.domain)
    xN, x1 = mesh.xN, mesh.x1
    a = 2.0 / (spec.gamma + 1.0)

    # vertical then horizontal interpolation onto (eps x1, eps xN)
    vert = np.empty_like(field.values)
    for i in range(field.values.shape[0]):
        vert[i] = PchipInterpolator(xN, field.values[i])(epsilon * xN)
    w = np.empty_like(field.values)
    for j in range(field.values.shape[1]):
        w[:, j] = PchipInterpolator(x1, vert[:, j])(epsilon * x1)
    w *= epsilon ** (-a)

    wfield = Field(w, field.domain, periodic=False, bottom_delta=field.bottom_delta)
    tspec = _rescaled_spec(spec, epsilon)
    res_w = assemble_residual(wfield, tspec)
    res_u = assemble_residual(field, spec)

    lo, hi = window if window else (field.domain.lam / 8.0, 3.0 * field.domain.lam / 4.0)
    rows = _window_rows(xN, (lo, hi))
    sup_w = float(np.nanmax(np.abs(res_w[:, rows])))
    sup_u = float(np.nanmax(np.abs(res_u[:, rows])))

    if budget is None:
        # the rescaled field has steeper boundary behavior, so budget the
        # truncation of w itself (plus the solved field's algebraic residual)
        trunc = float(np.max(truncation_estimate(xN, w)[:, rows - 1]))
        budget = 10.0 * (sup_u + trunc)
    return CheckReport(
        "rescale",
        passed=sup_w <= budget,
        details={
            "epsilon": epsilon,
            "residual_sup": sup_w,
            "original_residual_sup": sup_u,
            "budget": budget,
        },
    )
