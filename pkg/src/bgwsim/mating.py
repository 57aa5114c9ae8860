"""Mating functions and numerical verification of their hypotheses.

A :class:`MatingFunction` couples the two sexes: ``limit`` is the continuum
pair-count g(y, z), ``prelimit`` its integer-lattice counterpart used by the
discrete chain.  The checkers test, on finite grids, the hypotheses the limit
theory needs: uniform lattice convergence, domination by a(y^z)+b, vanishing
on the axes with a local Lipschitz estimate, and ellipticity away from the
axes.  Grid evidence cannot prove the continuum statements, so verdicts carry
their method and witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as expr_mod
from .measures import ConditionVerdict, Status

__all__ = ["MatingFunction", "DomainError", "min_mating", "from_expression",
           "check_B1", "check_B2_B3_B4"]

DEFAULT_GRID_STEP = 1.0 / 64.0
DEFAULT_GRID_BOUND = 20.0


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MatingFunction:
    """Pair of (prelimit, limit) mating functions with domination constants.

    ``limit`` maps nonnegative reals (vectorized) to pair counts;
    ``prelimit(N, j, k)`` maps integer head counts to an integer number of
    matings.  ``a_dom``, ``b_dom`` are the constants of the domination
    hypothesis g(y,z) <= a*(y^z) + b.
    """

    name: str
    limit: object
    prelimit: object
    a_dom: float = 1.0
    b_dom: float = 0.0

    def __call__(self, y, z):
        return self.limit(np.asarray(y, float), np.asarray(z, float))


def eval_limit(g: MatingFunction, y: float, z: float) -> float:
    if y < 0 or z < 0:
        raise DomainError(f"mating function arguments must be nonnegative, got ({y}, {z})")
    return float(g.limit(np.float64(y), np.float64(z)))


def min_mating() -> MatingFunction:
    """Monogamous mating with mutual fidelity: g_N = g = y ^ z."""
    return MatingFunction(
        name="min",
        limit=lambda y, z: np.minimum(y, z),
        prelimit=lambda N, j, k: np.minimum(j, k),
        a_dom=1.0,
        b_dom=0.0,
    )


def from_expression(text: str, a_dom: float = 1.0, b_dom: float = 0.0) -> MatingFunction:
    """Mating function from an expression in variables y, z.

    The prelimit applies the expression to the raw integer counts and floors
    the result (the number of matings is a count).
    """
    ast = expr_mod.parse(text)

    def limit(y, z):
        return expr_mod.evaluate(ast, y=y, z=z)

    def prelimit(N, j, k):
        return np.floor(expr_mod.evaluate(ast, y=np.asarray(j, float),
                                          z=np.asarray(k, float))).astype(np.int64)

    return MatingFunction(name=f"expr({text})", limit=limit, prelimit=prelimit,
                          a_dom=a_dom, b_dom=b_dom)


def _lattice_sup(g: MatingFunction, N: int, grid_bound: float,
                 row_chunk: int = 512) -> float:
    """sup over the lattice (j/N, k/N) in [0, grid_bound]^2 of
    |g_N(j, k)/N - g(j/N, k/N)|."""
    top = int(np.floor(grid_bound * N))
    ks = np.arange(top + 1)
    sup = 0.0
    for start in range(0, top + 1, row_chunk):
        js = np.arange(start, min(start + row_chunk, top + 1))
        J, K = np.meshgrid(js, ks, indexing="ij")
        pre = np.asarray(g.prelimit(N, J, K), float) / N
        lim = np.asarray(g.limit(J / N, K / N), float)
        sup = max(sup, float(np.max(np.abs(pre - lim))))
    return sup


def check_B1(g: MatingFunction, N_list, grid_bound: float = 8.0,
             tol: float = 1e-9) -> ConditionVerdict:
    """Uniform lattice convergence of g_N/N to g, scanned over an N-ladder.

    SATISFIED when the lattice sups vanish or decay cleanly; VIOLATED when
    they stay bounded away from zero without decaying; INCONCLUSIVE
    otherwise (the scan is evidence, not proof).
    """
    N_list = list(N_list)
    if any(n2 <= n1 for n1, n2 in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    sups = np.array([_lattice_sup(g, N, grid_bound) for N in N_list])
    witness = {"N": N_list, "sups": sups.tolist(), "grid_bound": grid_bound}
    nonincreasing = np.all(np.diff(sups) <= 1e-12)
    if sups[-1] <= tol:
        return ConditionVerdict(Status.SATISFIED, "numeric-scan", witness=witness)
    if nonincreasing and sups[-1] <= 0.6 * sups[0]:
        return ConditionVerdict(Status.SATISFIED, "numeric-scan", witness=witness)
    if sups[-1] >= 0.9 * sups[0] and np.all(np.diff(sups) >= -1e-12):
        return ConditionVerdict(Status.VIOLATED, "numeric-scan", witness=witness)
    return ConditionVerdict(Status.INCONCLUSIVE, "numeric-scan", witness=witness)


def check_B2_B3_B4(g: MatingFunction, delta: float, n: float,
                   grid_step: float = DEFAULT_GRID_STEP) -> dict:
    """Grid verification of domination (B2), axis vanishing plus a local
    Lipschitz estimate (B3), and ellipticity away from the axes (B4).

    Returns a record with one verdict per hypothesis and the finite-difference
    Lipschitz estimate.  The Lipschitz number is advisory: local
    Lipschitzness is not decidable from point evaluations.
    """
    if not (0.0 < delta < n):
        raise ValueError("need 0 < delta < n")

    ys = np.arange(0.0, n + grid_step / 2, grid_step)
    Y, Z = np.meshgrid(ys, ys, indexing="ij")
    vals = np.asarray(g.limit(Y, Z), float)

    # B2: domination by a*(y^z)+b on the grid
    dom = g.a_dom * np.minimum(Y, Z) + g.b_dom
    excess = float(np.max(vals - dom))
    if excess <= 1e-9:
        b2 = ConditionVerdict(Status.SATISFIED, "numeric-scan",
                              witness={"max_excess": excess})
    else:
        idx = np.unravel_index(np.argmax(vals - dom), vals.shape)
        b2 = ConditionVerdict(Status.VIOLATED, "numeric-scan",
                              witness={"max_excess": excess,
                                       "at": (float(Y[idx]), float(Z[idx]))})

    # B3: zero on the axes, Lipschitz slope estimated by finite differences
    axis_max = max(float(np.max(np.abs(vals[0, :]))), float(np.max(np.abs(vals[:, 0]))))
    slopes = max(float(np.max(np.abs(np.diff(vals, axis=0)))),
                 float(np.max(np.abs(np.diff(vals, axis=1))))) / grid_step
    b3_status = Status.SATISFIED if axis_max <= 1e-12 and np.isfinite(slopes) else Status.VIOLATED
    b3 = ConditionVerdict(b3_status, "numeric-scan",
                          witness={"axis_max": axis_max, "lipschitz_estimate": slopes})

    # B4: infimum on [delta, n]^2 (delta and n included exactly)
    box = np.unique(np.concatenate([[delta], ys[(ys >= delta) & (ys <= n)], [n]]))
    Yb, Zb = np.meshgrid(box, box, indexing="ij")
    inf_val = float(np.min(np.asarray(g.limit(Yb, Zb), float)))
    b4_status = Status.SATISFIED if inf_val > 1e-12 else Status.VIOLATED
    b4 = ConditionVerdict(b4_status, "numeric-scan",
                          witness={"inf": inf_val, "delta": delta, "n": n})

    return {"B2": b2, "B3": b3, "B4": b4, "lipschitz_estimate": slopes}
