"""Adaptive Simpson quadrature with an absolute-error budget."""

from __future__ import annotations

from typing import Callable

DEFAULT_TOL = 1e-10
DEFAULT_MAX_DEPTH = 40


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = DEFAULT_TOL,
                     max_depth: int = DEFAULT_MAX_DEPTH) -> float:
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Interval halving stops at ``max_depth``; the Richardson-corrected value
    is returned regardless, so a depth-limited result degrades gracefully
    rather than failing.
    """
    if a == b:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth) -> float:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return (_refine(f, a, m, fa, flm, fm, left, half, depth - 1)
            + _refine(f, m, b, fm, frm, fb, right, half, depth - 1))


def cumulative_integral(f: Callable[[float], float], ts, tol: float = DEFAULT_TOL,
                        max_depth: int = DEFAULT_MAX_DEPTH) -> list[float]:
    """Antiderivative samples: out[k] = integral of f from ts[0] to ts[k]."""
    out = [0.0]
    for a, b in zip(ts[:-1], ts[1:]):
        out.append(out[-1] + adaptive_simpson(f, a, b, tol, max_depth))
    return out
