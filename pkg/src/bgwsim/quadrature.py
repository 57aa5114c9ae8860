"""Adaptive quadrature for jump-measure moment integrals.

The integrands of interest are smooth except at finitely many points, are
typically single-signed, and may be improper at either endpoint:

* singular lower endpoint (densities like ``z**-2`` near 0),
* infinite upper endpoint.

Both are handled by geometric (dyadic) panel sweeps: panel contributions of a
convergent integral decay geometrically, while a divergent one produces
partial sums whose increments stop decaying.  In the latter case
:class:`NonConvergentIntegral` is raised; the condition checkers interpret it
as an infinite integral.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NonConvergentIntegral", "integrate_interval", "DEFAULT_REL_TOL", "DEFAULT_CEILING"]

DEFAULT_REL_TOL = 1e-8
DEFAULT_CEILING = 1e12

_MAX_BISECT_DEPTH = 48
_MAX_GEOM_PANELS = 600
# After this many geometric panels, increments that have stopped decaying are
# treated as divergence (the projected partial sums exceed any ceiling).
_MIN_PANELS_BEFORE_STALL = 40
_STALL_WINDOW = 8

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class NonConvergentIntegral(ArithmeticError):
    """The adaptive scheme detected a divergent (infinite) integral."""


def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = (x, w)
    return _gl_cache[order]


def _gl_panel(fn, a: float, b: float, order: int) -> float:
    x, w = _gl_nodes(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return float(half * np.dot(w, fn(mid + half * x)))


def _adaptive_panel(fn, a: float, b: float, tol: float) -> float:
    """Adaptive bisection with an 8/16 point Gauss-Legendre error estimate."""
    stack = [(a, b, 0)]
    total = 0.0
    while stack:
        lo, hi, depth = stack.pop()
        coarse = _gl_panel(fn, lo, hi, 8)
        fine = _gl_panel(fn, lo, hi, 16)
        if abs(fine - coarse) <= tol * max(abs(fine), 1e-300) + 1e-300 or depth >= _MAX_BISECT_DEPTH:
            total += fine
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


def _geometric_sweep(panel_values, total0: float, ceiling: float, rel_tol: float,
                     what: str) -> float:
    """Accumulate panels from a geometric sequence, detecting divergence."""
    total = total0
    increments: list[float] = []
    small_streak = 0
    for k, c in enumerate(panel_values):
        total += c
        increments.append(abs(c))
        if abs(total) > ceiling and len(increments) >= 2 and increments[-1] >= 0.9 * increments[-2]:
            raise NonConvergentIntegral(
                f"partial sums exceed ceiling {ceiling:g} while {what}")
        # The stopped geometric tail sums to about c * r/(1-r); a 0.02 factor
        # keeps the truncation error well inside rel_tol for decay ratios
        # up to ~0.9 (slower decay is caught by the stall detector).
        if abs(c) <= 0.02 * rel_tol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
        if k + 1 >= _MIN_PANELS_BEFORE_STALL and len(increments) >= 2 * _STALL_WINDOW:
            recent = increments[-_STALL_WINDOW:]
            before = increments[-2 * _STALL_WINDOW:-_STALL_WINDOW]
            if min(recent) > 0 and np.median(recent) >= 0.9 * np.median(before):
                raise NonConvergentIntegral(
                    f"panel increments stopped decaying while {what}")
    raise NonConvergentIntegral(
        f"no convergence after {_MAX_GEOM_PANELS} panels while {what}")


def integrate_interval(fn, lo: float, hi: float, *, rel_tol: float = DEFAULT_REL_TOL,
                       ceiling: float = DEFAULT_CEILING, singular_lo: bool = False,
                       breakpoints=()) -> float:
    """Integrate ``fn`` over (lo, hi), refining toward a singular ``lo``.

    ``hi`` may be ``inf`` (geometric expansion).  ``breakpoints`` are interior
    points where the integrand is continuous but not smooth; panels are split
    there.  Raises :class:`NonConvergentIntegral` when an improper part
    diverges.
    """
    if hi <= lo:
        return 0.0
    panel_tol = rel_tol / 4.0
    improper_hi = not np.isfinite(hi)

    pts = sorted(p for p in breakpoints if lo < p < hi)
    if improper_hi:
        anchor = max([1.0, 2.0 * lo] + [2.0 * p for p in pts])
        edges = [lo] + pts + [anchor]
    else:
        edges = [lo] + pts + [hi]

    total = 0.0
    if singular_lo:
        left_edge, first_stop = edges[0], edges[1]
        width = first_stop - left_edge

        def left_panels():
            for k in range(_MAX_GEOM_PANELS):
                a = left_edge + width * 0.5 ** (k + 1)
                b = left_edge + width * 0.5 ** k
                yield _adaptive_panel(fn, a, b, panel_tol)

        total = _geometric_sweep(left_panels(), 0.0, ceiling, rel_tol,
                                 f"refining toward {left_edge:g}")
        edges = edges[1:]

    for a, b in zip(edges[:-1], edges[1:]):
        total += _adaptive_panel(fn, a, b, panel_tol)

    if improper_hi:
        base = edges[-1]

        def upper_panels():
            for k in range(_MAX_GEOM_PANELS):
                yield _adaptive_panel(fn, base * 2.0 ** k, base * 2.0 ** (k + 1), panel_tol)

        total = _geometric_sweep(upper_panels(), total, ceiling, rel_tol,
                                 "expanding toward infinity")
    return total
