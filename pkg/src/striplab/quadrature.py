"""Adaptive Simpson quadrature.

A small, deterministic adaptive integrator used for the improper integrals in
this package (tail primitives and profile inversion).  The classical
divide-and-conquer scheme with the |S_fine - S_coarse|/15 error estimate is
plenty here: the integrands are continuous, and the singular/tail regimes are
split by the callers before integration.
"""

from __future__ import annotations

from typing import Callable

from .errors import QuadratureError


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Integrate f over [a, b] to absolute tolerance tol.

    Raises QuadratureError if the recursion depth limit is reached before the
    local error estimate drops below the (subdivided) tolerance.
    """
    if b < a:
        raise QuadratureError(f"reversed interval [{a}, {b}]")
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise QuadratureError(
            f"adaptive Simpson depth exhausted on [{a}, {b}] (err~{abs(err) / 15.0:.3e})"
        )
    return _simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _simpson_rec(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )
