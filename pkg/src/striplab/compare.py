"""Comparison-principle machinery: narrow-strip thresholds and barriers.

For a one-sided Lipschitz constant C bounding (f(s) - f(t))/(s - t) on the
relevant range, ordered sub/supersolution data force ordered solutions on
strips of height

    lambda_star(C) = pi (4 + 2 C)^(-1/2)

(capped at the strip height of the mesh at hand).  The constant comes from the
interval Poincare inequality with constant pi^2 / lambda^2, whose discrete
counterpart -- the smallest eigenvalue of the Dirichlet second-difference
operator -- is computed here as a cross-check.  When f is nonincreasing the
discrete Jacobian is an M-matrix and the comparison holds on every strip,
narrow or not.

discrete_comparison_test() runs the actual inequality on a pair of discrete
sub/supersolutions; upper_barrier_residual() checks that multiples of the
explicit pure-power solution dominate f in the supersolution sense.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import DomainError, PreconditionError
from .nonlinearity import NonlinearitySpec, evaluate, one_sided_lipschitz
from .profile import pure_exact
from .strip_solver import Field, build_mesh, assemble_residual
from .verifier import CheckReport, truncation_estimate


def lambda_star(C_M: float) -> float:
    """Narrow-strip comparison threshold pi (4 + 2 C_M)^(-1/2)."""
    if C_M < 0:
        raise DomainError(f"one-sided Lipschitz constant must be >= 0, got {C_M}")
    return math.pi / math.sqrt(4.0 + 2.0 * C_M)


def poincare_eigenvalue(lam: float, n: int) -> float:
    """Smallest eigenvalue of the n-point Dirichlet second-difference operator
    on (0, lam), by LAPACK bisection/inverse iteration on the tridiagonal
    matrix.  Converges to pi^2 / lam^2 at second order in h = lam/(n+1)."""
    if n < 3:
        raise DomainError(f"need at least 3 interior nodes, got {n}")
    if not lam > 0:
        raise DomainError(f"interval length must be positive, got {lam}")
    h = lam / (n + 1)
    d = np.full(n, 2.0 / h**2)
    e = np.full(n - 1, -1.0 / h**2)
    return float(eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0))[0])


def discrete_comparison_test(
    u_sub: Field,
    v_super: Field,
    spec: NonlinearitySpec,
    lam: float,
    sign_tol: float | None = None,
    comparison_tol: float = 0.0,
) -> CheckReport:
    """Ordered-data comparison u_sub <= v_super on the substrip below lam.

    Preconditions (raising PreconditionError when violated beyond sign_tol):
    u_sub has residual <= 0, v_super residual >= 0, ordering holds on the row
    at height lam, and v_super is positive on the bottom row.  The default
    sign_tol is 10x the local truncation estimate, since discrete residuals of
    continuous sub/supersolutions are sign-definite only up to O(h^2).

    The inequality is asserted when f is nonincreasing on the relevant range
    (C = 0: the discrete operator is an M-matrix, any lam) or when
    lam <= lambda_star(C); beyond the threshold the outcome is reported
    without being asserted.
    """
    if u_sub.domain != v_super.domain:
        raise PreconditionError("fields must share a mesh")
    mesh = build_mesh(u_sub.domain)
    xN = mesh.xN
    jlam = int(np.argmin(np.abs(xN - lam)))
    if abs(xN[jlam] - lam) > 1e-9 * max(lam, 1.0):
        raise PreconditionError(f"lam={lam} does not align with a mesh height")
    if jlam < 2:
        raise PreconditionError("comparison level too close to the bottom row")

    # residual signs are checked node by node against the local truncation
    # scale: near the singular bottom the discrete defect of a continuous
    # sub/supersolution is legitimately large, while an interior sign
    # violation of O(1) must not hide behind it.
    if sign_tol is None:
        tol_u = 10.0 * truncation_estimate(xN, u_sub.values)
        tol_v = 10.0 * truncation_estimate(xN, v_super.values)
    else:
        tol_u = tol_v = np.full(
            (u_sub.values.shape[0], xN.size - 2), float(sign_tol)
        )

    res_u = assemble_residual(u_sub, spec)[:, 1:-1]
    res_v = assemble_residual(v_super, spec)[:, 1:-1]
    sub_excess = np.nanmax(res_u - tol_u)
    super_deficit = np.nanmin(res_v + tol_v)
    if sub_excess > 0:
        raise PreconditionError(
            f"u_sub residual exceeds the subsolution sign tolerance by {sub_excess:.3e}"
        )
    if super_deficit < 0:
        raise PreconditionError(
            f"v_super residual undercuts the supersolution sign tolerance by {-super_deficit:.3e}"
        )
    gap_top = u_sub.values[:, jlam] - v_super.values[:, jlam]
    if np.any(gap_top > comparison_tol):
        raise PreconditionError("ordering fails on the comparison row itself")
    if np.any(v_super.values[:, 0] <= 0):
        raise PreconditionError("supersolution must be positive on the bottom row")

    C_M = one_sided_lipschitz(spec, float(np.max(u_sub.values)))
    lstar = min(lambda_star(C_M), u_sub.domain.lam)
    unconditional = C_M == 0.0
    asserted = unconditional or lam <= lstar

    diff = u_sub.values[:, :jlam] - v_super.values[:, :jlam]
    max_violation = float(np.max(diff))
    held = max_violation <= comparison_tol

    details = {
        "lambda": lam,
        "lambda_star": lstar,
        "C_M": C_M,
        "regime": "unconditional (nonincreasing f)"
        if unconditional
        else ("narrow strip" if lam <= lstar else "beyond lambda_star"),
        "asserted": asserted,
        "held": held,
        "max_violation": max_violation,
        "sign_tol": sign_tol,
    }
    return CheckReport("comparison", passed=held if asserted else True, details=details)


def upper_barrier_residual(
    mu: float,
    gamma: float,
    spec: NonlinearitySpec,
    domain,
    rho: float = math.inf,
    budget: float | None = None,
) -> CheckReport:
    """Supersolution margin of the scaled pure-power barrier mu K xN^(2/(g+1)).

    The barrier solves -Delta v_mu = mu^(gamma+1) / v_mu^gamma exactly, so it
    dominates any f bounded by c1 t^(-gamma) once mu^(gamma+1) >= c1.  The
    check forms the discrete residual -Delta_h v_mu - f(v_mu) on rows where
    v_mu < rho and passes when it stays above -budget (budget defaulting to
    10x the local truncation estimate of the barrier itself).
    """
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    mesh = build_mesh(domain)
    xN = mesh.xN
    vmu = mu * pure_exact(gamma, xN)

    hm = xN[1:-1] - xN[:-2]
    hp = xN[2:] - xN[1:-1]
    lap = 2.0 * (
        (vmu[:-2] / hm + vmu[2:] / hp) / (hm + hp) - vmu[1:-1] / (hm * hp)
    )
    residual = -lap - evaluate(spec, vmu[1:-1])

    checked = vmu[1:-1] < rho
    if not np.any(checked):
        raise DomainError(f"no rows with barrier values below rho={rho}")
    if budget is None:
        budget = 10.0 * float(np.max(truncation_estimate(xN, vmu[None, :])))

    min_margin = float(np.min(residual[checked]))
    jmin = int(np.nonzero(checked)[0][np.argmin(residual[checked])]) + 1
    c_envelope, _ = spec.singular_model()
    applicable = mu ** (gamma + 1.0) >= c_envelope
    passed = applicable and min_margin >= -budget
    return CheckReport(
        "upper_barrier",
        passed,
        details={
            "mu": mu,
            "mu_power": mu ** (gamma + 1.0),
            "envelope_coefficient": c_envelope,
            "applicable": applicable,
            "min_margin": min_margin,
            "at_xN": float(xN[jmin]),
            "rows_checked": int(np.sum(checked)),
            "budget": budget,
            "rho": rho,
        },
    )


def threshold_rows(lambdas, constants) -> list[dict]:
    """Narrow-strip threshold table over a (lambda, C_M) grid."""
    rows = []
    for C in constants:
        lstar = lambda_star(C)
        for lam in lambdas:
            rows.append(
                {
                    "lambda": float(lam),
                    "C_M": float(C),
                    "lambda_star": lstar,
                    "held": lam <= lstar,
                }
            )
    return rows


def export_threshold_csv(path, rows) -> None:
    """CSV dump `lambda,C_M,lambda_star,held` of a threshold/comparison sweep."""
    from .io import write_csv_atomic

    write_csv_atomic(
        path,
        ("lambda", "C_M", "lambda_star", "held"),
        (
            (r["lambda"], r["C_M"], r["lambda_star"], "true" if r["held"] else "false")
            for r in rows
        ),
    )
