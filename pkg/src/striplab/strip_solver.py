"""Finite-difference solver for -Delta u = f(u) on truncated 2-D strips.

The domain is the rectangle (0, L) x (0, lam) meshed uniformly in x1 and with
a graded vertical mesh

    xN(j) = lam (j / ny)^q,   j = 0..ny,

which clusters nodes at the singular bottom boundary; the default grading
q = (gamma + 1)/2 turns the boundary behavior u ~ xN^(2/(gamma+1)) into a
linear function of the mesh index, equidistributing interpolation error.

The continuous problem has u = 0 on the bottom while f(u) blows up there, so
the discrete system instead imposes u = delta on the bottom row and drives
delta -> 0 along a continuation schedule.  Each continuation step is solved by
a damped Newton iteration on the five-point residual

    R(u) = -Delta_h u - f(u)

with a backtracking line search that accepts a step only if the residual norm
decreases AND the iterate stays above a positivity floor proportional to
delta + the explicit pure-power barrier.  The Jacobian -Delta_h - diag(f'(u))
is an M-matrix for nonincreasing f; for non-monotone f a Levenberg shift mu*I
is grown on line-search failure to keep the linear algebra solvable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConfigError,
    DomainError,
    NonConvergence,
    PositivityError,
    PositivityLoss,
    SingularJacobian,
)
from .nonlinearity import NonlinearitySpec, derivative, evaluate
from .profile import ProfileTable, pure_exact

DEFAULT_DELTA_SCHEDULE = tuple(10.0 ** (-k) for k in range(1, 9))


@dataclass(frozen=True)
class StripDomain:
    L: float
    lam: float
    nx: int
    ny: int
    q: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.lam > 0):
            raise DomainError("strip dimensions must be positive")
        if self.nx < 4 or self.ny < 4:
            raise DomainError("nx, ny must be at least 4")
        if self.q < 1:
            raise DomainError(f"grading exponent q must be >= 1, got {self.q}")


@dataclass(frozen=True)
class Mesh:
    x1: np.ndarray  # horizontal nodes, uniform, shape (nx,)
    xN: np.ndarray  # vertical nodes, graded, shape (ny+1,)

    @property
    def dx(self) -> float:
        return float(self.x1[1] - self.x1[0])


def build_mesh(domain: StripDomain) -> Mesh:
    """Uniform horizontal nodes on [0, L]; vertical nodes lam (j/ny)^q."""
    x1 = np.linspace(0.0, domain.L, domain.nx)
    j = np.arange(domain.ny + 1, dtype=float)
    xN = domain.lam * (j / domain.ny) ** domain.q
    return Mesh(x1, xN)


# -- boundary data -----------------------------------------------------------


@dataclass(frozen=True)
class Periodic:
    """Identify the x1 = 0 and x1 = L columns (L-periodic strip)."""


@dataclass(frozen=True)
class DirichletProfile:
    """Side columns pinned to a 1-D profile evaluated at the mesh heights."""

    table: ProfileTable


@dataclass(frozen=True)
class DirichletCustom:
    func: Callable[[np.ndarray], np.ndarray]  # xN -> side values


Sides = Periodic | DirichletProfile | DirichletCustom


@dataclass(frozen=True)
class BoundaryData:
    """bottom is the regularization value delta (the target of the schedule);
    top maps x1 to positive values (a constant is promoted)."""

    bottom: float
    top: Callable[[np.ndarray], np.ndarray] | float
    sides: Sides = Periodic()

    def __post_init__(self):
        if self.bottom < 0:
            raise DomainError(f"bottom value must be >= 0, got {self.bottom}")

    def top_values(self, x1: np.ndarray) -> np.ndarray:
        vals = (
            np.full_like(x1, float(self.top))
            if np.isscalar(self.top) or isinstance(self.top, (int, float))
            else np.asarray(self.top(x1), dtype=float)
        )
        if np.any(vals <= 0):
            raise DomainError("top boundary data must be positive")
        return vals

    def side_values(self, xN: np.ndarray) -> np.ndarray | None:
        if isinstance(self.sides, Periodic):
            return None
        if isinstance(self.sides, DirichletProfile):
            vals = self.sides.table.interpolator()(xN)
        else:
            vals = np.asarray(self.sides.func(xN), dtype=float)
        return vals


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-8
    max_iters: int = 60
    damping: float = 0.5
    floor_fraction: float = 0.1
    delta_schedule: tuple[float, ...] = DEFAULT_DELTA_SCHEDULE

    def __post_init__(self):
        sched = tuple(float(d) for d in self.delta_schedule)
        object.__setattr__(self, "delta_schedule", sched)
        if not sched or any(d <= 0 for d in sched):
            raise ConfigError("delta_schedule must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("delta_schedule must be strictly decreasing")
        if not 0 < self.floor_fraction < 1:
            raise ConfigError("floor_fraction must lie in (0, 1)")
        if not 0 < self.damping < 1:
            raise ConfigError("damping factor must lie in (0, 1)")


@dataclass
class Field:
    """Positive grid function on the full mesh, shape (nx, ny+1).

    values[i, j] lives at (x1[i], xN[j]); row j = 0 is the regularized bottom,
    j = ny the top.  periodic marks whether column nx-1 is identified with
    column 0.  bottom_delta records the final continuation value, which the
    verifier uses to place fit windows above the regularization plateau.
    """

    values: np.ndarray
    domain: StripDomain
    periodic: bool = False
    bottom_delta: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.nx, self.domain.ny + 1):
            raise DomainError(
                f"field shape {self.values.shape} does not match domain "
                f"({self.domain.nx}, {self.domain.ny + 1})"
            )

    def validate(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise PositivityError("field contains non-finite values")
        if np.any(self.values[:, 1:-1] <= 0):
            raise PositivityError("field has nonpositive interior values")

    def mesh(self) -> Mesh:
        return build_mesh(self.domain)

    def to_csv(self, path) -> None:
        from .io import write_csv_atomic

        mesh = self.mesh()
        rows = (
            (mesh.x1[i], mesh.xN[j], self.values[i, j])
            for i in range(self.domain.nx)
            for j in range(self.domain.ny + 1)
        )
        write_csv_atomic(path, ("x1", "xN", "u"), rows)


# ---------------------------------------------------------------------------
# Residual assembly
# ---------------------------------------------------------------------------


def _vertical_weights(xN: np.ndarray):
    hm = xN[1:-1] - xN[:-2]
    hp = xN[2:] - xN[1:-1]
    return hm, hp


def _unknown_columns(nx: int, periodic: bool) -> np.ndarray:
    # periodic: column nx-1 duplicates column 0, unknowns are 0..nx-2
    return np.arange(0, nx - 1) if periodic else np.arange(1, nx - 1)


def assemble_residual(
    field: Field, spec: NonlinearitySpec, bc: BoundaryData | None = None
) -> np.ndarray:
    """Discrete residual R = -Delta_h u - f(u) on the full grid shape.

    Entries at Dirichlet boundary nodes are NaN (no equation lives there).
    The vertical second difference uses the nonuniform three-point formula
    2 [ (u_below/h- + u_above/h+) / (h- + h+) - u / (h- h+) ].
    Raises PositivityError if any interior value is <= 0.
    """
    field.validate()
    mesh = field.mesh()
    u = field.values
    periodic = field.periodic if bc is None else isinstance(bc.sides, Periodic)
    hm, hp = _vertical_weights(mesh.xN)
    dx = mesh.dx
    cols = _unknown_columns(field.domain.nx, periodic)

    ui = u[cols][:, 1:-1]
    if periodic:
        nw = field.domain.nx - 1  # wrap period in columns
        left = u[(cols - 1) % nw][:, 1:-1]
        right = u[(cols + 1) % nw][:, 1:-1]
    else:
        left = u[cols - 1][:, 1:-1]
        right = u[cols + 1][:, 1:-1]
    below = u[cols][:, :-2]
    above = u[cols][:, 2:]

    lap = (left - 2.0 * ui + right) / dx**2 + 2.0 * (
        (below / hm + above / hp) / (hm + hp) - ui / (hm * hp)
    )
    res = -lap - evaluate(spec, ui)

    out = np.full_like(u, np.nan)
    out[cols[:, None], np.arange(1, field.domain.ny)[None, :]] = res
    if periodic:
        out[-1, 1:-1] = out[0, 1:-1]
    return out


# ---------------------------------------------------------------------------
# Newton continuation
# ---------------------------------------------------------------------------


def _initial_guess(mesh: Mesh, spec: NonlinearitySpec, delta: float) -> np.ndarray:
    """Pure-power barrier profile max'ed with the regularization value."""
    barrier = _barrier_profile(mesh.xN, spec)
    col = np.maximum(barrier, delta)
    return np.tile(col, (mesh.x1.size, 1))


def _barrier_profile(xN: np.ndarray, spec: NonlinearitySpec) -> np.ndarray:
    c0, g0 = spec.singular_model()
    if c0 > 0.0 and g0 > 1.0:
        return c0 ** (1.0 / (g0 + 1.0)) * pure_exact(g0, xN)
    return np.zeros_like(xN)


def newton_solve(
    domain: StripDomain,
    spec: NonlinearitySpec,
    bc: BoundaryData,
    config: SolverConfig,
    initial: np.ndarray | None = None,
    trace: list | None = None,
) -> Field:
    """Solve the discrete problem by delta-continuation and damped Newton.

    bc.bottom must equal the first entry of config.delta_schedule (the
    continuation starts there and ends at the schedule's last value).  Each
    delta is iterated until the residual sup-norm falls below newton_tol.
    Appends per-iteration records to trace when given.
    """
    sched = config.delta_schedule
    if not math.isclose(bc.bottom, sched[0], rel_tol=1e-12):
        raise ConfigError(
            f"bc.bottom ({bc.bottom}) must equal the first delta in the schedule ({sched[0]})"
        )
    mesh = build_mesh(domain)
    periodic = isinstance(bc.sides, Periodic)
    cols = _unknown_columns(domain.nx, periodic)
    hm, hp = _vertical_weights(mesh.xN)
    dx = mesh.dx
    floor_barrier = _barrier_profile(mesh.xN[1:-1], spec)

    u = np.empty((domain.nx, domain.ny + 1))
    u[:, :] = _initial_guess(mesh, spec, sched[0]) if initial is None else np.asarray(
        initial, dtype=float
    )
    top = bc.top_values(mesh.x1)
    u[:, -1] = top
    side = bc.side_values(mesh.xN)
    if side is not None:
        u[0, :] = side
        u[-1, :] = side
        u[0, -1] = top[0]
        u[-1, -1] = top[-1]

    niu, nju = cols.size, domain.ny - 1
    struct = _jacobian_structure(domain, periodic, cols)

    def fld(vals):
        return Field(vals, domain, periodic=periodic, bottom_delta=float(vals[0, 0]))

    def interior(vals):
        return vals[cols[:, None], np.arange(1, domain.ny)[None, :]]

    def set_interior(vals, block):
        vals[cols[:, None], np.arange(1, domain.ny)[None, :]] = block
        if periodic:
            vals[-1, :] = vals[0, :]

    for delta in sched:
        u[:, 0] = delta
        if periodic:
            u[-1, :] = u[0, :]
        floor = config.floor_fraction * (delta + floor_barrier)
        mu = 0.0
        for it in range(config.max_iters):
            R = _interior_residual(u, cols, periodic, domain, hm, hp, dx, spec)
            rnorm = float(np.max(np.abs(R)))
            if trace is not None:
                trace.append(
                    {
                        "delta": float(delta),
                        "iteration": it,
                        "residual_norm": rnorm,
                        "mu": mu,
                    }
                )
            if rnorm <= config.newton_tol:
                break

            ui = interior(u)
            fp = derivative(spec, ui)
            # Levenberg retry loop: grow mu when the line search fails
            accepted = False
            while not accepted:
                J = _assemble_jacobian(struct, hm, hp, dx, fp, mu, niu, nju)
                try:
                    lu = spla.splu(J)
                except RuntimeError as exc:
                    raise SingularJacobian(str(exc)) from exc
                step = lu.solve(-R.ravel(order="F"))
                if not np.all(np.isfinite(step)):
                    raise SingularJacobian("non-finite Newton step")
                S = step.reshape((nju, niu)).T

                alpha = 1.0
                positivity_ok = False
                for _ in range(60):
                    un = ui + alpha * S
                    if np.all(un > floor[None, :]):
                        positivity_ok = True
                        u_try = u.copy()
                        set_interior(u_try, un)
                        Rn = _interior_residual(
                            u_try, cols, periodic, domain, hm, hp, dx, spec
                        )
                        if float(np.max(np.abs(Rn))) < rnorm:
                            u = u_try
                            accepted = True
                            if trace is not None:
                                trace[-1]["step_length"] = alpha
                            break
                    alpha *= config.damping
                if accepted:
                    mu = 0.0  # reset the shift after every successful step
                    break
                nonmonotone = bool(np.any(fp > 0))
                if nonmonotone and mu < 1e12:
                    mu = 10.0 * mu if mu > 0 else 1.0
                    continue
                if not positivity_ok:
                    raise PositivityLoss(
                        f"line search fell below the positivity floor at delta={delta}"
                    )
                raise NonConvergence(
                    f"line search stalled at delta={delta}, residual {rnorm:.3e}"
                )
        else:
            raise NonConvergence(
                f"Newton budget exhausted at delta={delta}, residual {rnorm:.3e}"
            )

    out = fld(u)
    out.validate()
    return out


def _interior_residual(u, cols, periodic, domain, hm, hp, dx, spec):
    ui = u[cols][:, 1:-1]
    if np.any(ui <= 0):
        raise PositivityError("iterate lost interior positivity")
    if periodic:
        nw = domain.nx - 1
        left = u[(cols - 1) % nw][:, 1:-1]
        right = u[(cols + 1) % nw][:, 1:-1]
    else:
        left = u[cols - 1][:, 1:-1]
        right = u[cols + 1][:, 1:-1]
    below = u[cols][:, :-2]
    above = u[cols][:, 2:]
    lap = (left - 2.0 * ui + right) / dx**2 + 2.0 * (
        (below / hm + above / hp) / (hm + hp) - ui / (hm * hp)
    )
    return -lap - evaluate(spec, ui)


def _jacobian_structure(domain: StripDomain, periodic: bool, cols: np.ndarray):
    """Precompute sparse index arrays for the five-point Jacobian."""
    niu, nju = cols.size, domain.ny - 1
    II, JJ = np.meshgrid(np.arange(niu), np.arange(nju), indexing="ij")
    K = JJ * niu + II

    entries = {"diag": (K.ravel(), K.ravel())}
    for tag, sgn in (("left", -1), ("right", +1)):
        if periodic:
            neighbor = (II + sgn) % niu
            mask = np.ones_like(II, dtype=bool)
        else:
            neighbor = II + sgn
            mask = (neighbor >= 0) & (neighbor < niu)
        entries[tag] = (K[mask], (JJ[mask] * niu + neighbor[mask]), mask)
    for tag, sgn in (("below", -1), ("above", +1)):
        neighbor = JJ + sgn
        mask = (neighbor >= 0) & (neighbor < nju)
        entries[tag] = (K[mask], (neighbor[mask] * niu + II[mask]), mask)
    return entries


def _assemble_jacobian(struct, hm, hp, dx, fp, mu, niu, nju):
    """J = -Delta_h - diag(f'(u)) + mu I in CSC form."""
    diag_vert = 2.0 / (hm * hp)
    below_c = 2.0 / (hm * (hm + hp))
    above_c = 2.0 / (hp * (hm + hp))

    rows, colsx, data = [], [], []
    r, c = struct["diag"]
    diag = (2.0 / dx**2 + diag_vert[None, :] - fp + mu).ravel()
    rows.append(r)
    colsx.append(c)
    data.append(diag)
    for tag, coeff in (
        ("left", None),
        ("right", None),
        ("below", below_c),
        ("above", above_c),
    ):
        r, c, mask = struct[tag]
        if coeff is None:
            vals = np.full(r.size, -1.0 / dx**2)
        else:
            vals = -np.broadcast_to(coeff[None, :], mask.shape)[mask]
        rows.append(r)
        colsx.append(c)
        data.append(vals)
    n = niu * nju
    J = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(colsx))),
        shape=(n, n),
    )
    return J.tocsc()


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------


def convergence_study(
    domains,
    spec: NonlinearitySpec,
    bc_factory: Callable[[StripDomain], BoundaryData],
    config: SolverConfig,
    exact: Callable[[np.ndarray, np.ndarray], np.ndarray],
    window: tuple[float, float] | None = None,
) -> dict:
    """Observed convergence orders on nested meshes against an exact solution.

    domains must refine ny by doubling; errors are sup-norms over the interior
    window (default [lam/4, 3 lam/4] in xN).  Returns per-mesh errors and the
    orders log2(e_k / e_{k+1}).
    """
    errors = []
    for dom in domains:
        fld = newton_solve(dom, spec, bc_factory(dom), config)
        mesh = fld.mesh()
        lo, hi = window if window else (dom.lam / 4.0, 3.0 * dom.lam / 4.0)
        rows = (mesh.xN >= lo) & (mesh.xN <= hi)
        uex = exact(mesh.x1[:, None], mesh.xN[None, :])
        errors.append(float(np.max(np.abs(fld.values - uex)[:, rows])))
    orders = [
        math.log2(e0 / e1) if e1 > 0 else math.inf for e0, e1 in zip(errors, errors[1:])
    ]
    return {"errors": errors, "orders": orders}
