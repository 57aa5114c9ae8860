"""Jump measures on (0,inf) and [0,inf)^2 and their integrability checkers.

A 1-d :class:`JumpMeasure` is a finite sum of point atoms and density parts;
a :class:`JointJumpMeasure` adds planar atoms and linear-curve push-forwards
of 1-d measures (mass at ``(c1*u, c2*u)`` for ``u`` drawn from a base
measure).  Every measure the limit theory needs fits this closed family:
axis-supported measures are curves with one zero coefficient, and the
sex-partition image measure is the curve with coefficients ``(q, 1-q)``.

Moment integrals are computed by the adaptive quadrature of
:mod:`bgwsim.quadrature`; a divergent integral surfaces as
:class:`~bgwsim.quadrature.NonConvergentIntegral` and the condition checkers
translate it into a VIOLATED verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .quadrature import (
    DEFAULT_CEILING,
    DEFAULT_REL_TOL,
    NonConvergentIntegral,
    integrate_interval,
)

__all__ = [
    "MeasureError",
    "UnsupportedForm",
    "TruncationFunction",
    "default_truncation",
    "Atom",
    "DensityPart",
    "JumpMeasure",
    "JointAtom",
    "CurvePart",
    "JointJumpMeasure",
    "combine_nu",
    "Status",
    "ConditionVerdict",
    "check_F0",
    "check_first_moment",
    "check_F6",
    "check_F6_sum",
    "integrate",
    "TailSampler",
    "default_scan_grid",
]

_INF = float("inf")


class MeasureError(ValueError):
    """Structural or integrability violation at measure construction."""


class UnsupportedForm(RuntimeError):
    """The measure admits neither a decision rule nor a stable scan."""


# ---------------------------------------------------------------------------
# truncation function
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TruncationFunction:
    """Bounded continuous function equal to the identity near zero.

    ``bound`` is a uniform bound for ``|h|`` and ``agreement_radius`` the
    radius on which ``h(u) = u`` holds exactly.
    """

    fn: object
    bound: float
    agreement_radius: float

    def __post_init__(self):
        if self.bound <= 0 or self.agreement_radius <= 0:
            raise MeasureError("truncation bound and agreement radius must be positive")

    def __call__(self, u):
        return self.fn(np.asarray(u, dtype=float))


def default_truncation() -> TruncationFunction:
    """The clamp h(u) = (-1) v (u ^ 1), bound 1, agreement radius 1."""
    return TruncationFunction(fn=lambda u: np.clip(u, -1.0, 1.0),
                              bound=1.0, agreement_radius=1.0)


# ---------------------------------------------------------------------------
# one-dimensional measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    location: float
    mass: float

    def __post_init__(self):
        if not (self.location > 0.0):
            raise MeasureError(f"atom location must be > 0, got {self.location}")
        if not (self.mass > 0.0):
            raise MeasureError(f"atom mass must be > 0, got {self.mass}")


@dataclass(frozen=True, eq=False)
class DensityPart:
    """Density ``fn`` (vectorized) on the interval (lo, hi]; ``hi`` may be inf.

    ``singular_lo`` flags a density that blows up at ``lo``; quadrature then
    refines geometrically toward that endpoint.
    """

    fn: object
    lo: float
    hi: float
    singular_lo: bool = False
    label: str = "density"

    def __post_init__(self):
        if self.lo < 0 or self.hi <= self.lo:
            raise MeasureError(f"invalid density support ({self.lo}, {self.hi}]")


@dataclass(frozen=True, eq=False)
class JumpMeasure:
    """Sigma-finite measure on (0, inf): finitely many atoms plus densities."""

    atoms: tuple[Atom, ...] = ()
    densities: tuple[DensityPart, ...] = ()

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "JumpMeasure":
        return cls()

    @classmethod
    def from_atoms(cls, pairs) -> "JumpMeasure":
        return cls(atoms=tuple(Atom(float(u), float(m)) for u, m in pairs))

    @classmethod
    def atom(cls, location: float, mass: float = 1.0) -> "JumpMeasure":
        return cls.from_atoms([(location, mass)])

    @classmethod
    def power_density(cls, exponent: float, lo: float = 0.0, hi: float = 1.0,
                      coeff: float = 1.0) -> "JumpMeasure":
        """coeff * z**exponent dz on (lo, hi]."""
        if coeff <= 0:
            raise MeasureError("density coefficient must be positive")
        p, c = float(exponent), float(coeff)
        part = DensityPart(fn=lambda z: c * np.power(z, p), lo=float(lo), hi=float(hi),
                           singular_lo=(lo == 0.0 and p < 0),
                           label=f"{c:g}*z^{p:g}")
        return cls(densities=(part,))

    @classmethod
    def log_power_density(cls, exponent: float = -2.0, lo: float = 0.0,
                          hi: float = 0.5, coeff: float = 1.0) -> "JumpMeasure":
        """coeff * (-log z) * z**exponent dz on (lo, hi]; requires hi <= 1."""
        if hi > 1.0:
            raise MeasureError("log_power density is nonnegative only on (0, 1]")
        if coeff <= 0:
            raise MeasureError("density coefficient must be positive")
        p, c = float(exponent), float(coeff)
        part = DensityPart(fn=lambda z: c * (-np.log(z)) * np.power(z, p),
                           lo=float(lo), hi=float(hi), singular_lo=(lo == 0.0),
                           label=f"{c:g}*(-log z)*z^{p:g}")
        return cls(densities=(part,))

    @classmethod
    def constant_density(cls, value: float, lo: float, hi: float) -> "JumpMeasure":
        if value <= 0:
            raise MeasureError("density value must be positive")
        v = float(value)
        part = DensityPart(fn=lambda z: np.full_like(np.asarray(z, float), v),
                           lo=float(lo), hi=float(hi), label=f"{v:g}")
        return cls(densities=(part,))

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "JumpMeasure") -> "JumpMeasure":
        return JumpMeasure(atoms=self.atoms + other.atoms,
                           densities=self.densities + other.densities)

    def scaled(self, c: float) -> "JumpMeasure":
        """Push-forward under z = c*u (c > 0)."""
        if c <= 0:
            raise MeasureError("scale factor must be positive")
        atoms = tuple(Atom(a.location * c, a.mass) for a in self.atoms)
        dens = tuple(
            DensityPart(fn=(lambda f, cc: (lambda z: f(np.asarray(z, float) / cc) / cc))(d.fn, c),
                        lo=d.lo * c, hi=d.hi * c, singular_lo=d.singular_lo,
                        label=f"pushforward(x{c:g}, {d.label})")
            for d in self.densities)
        return JumpMeasure(atoms=atoms, densities=dens)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.densities

    # -- integration --------------------------------------------------------

    def integrate(self, fn, region=(0.0, _INF), *, rel_tol: float = DEFAULT_REL_TOL,
                  ceiling: float = DEFAULT_CEILING, breakpoints=()) -> float:
        """Integral of the vectorized ``fn`` against the measure over the
        closed region ``[a, b]`` (atoms at the endpoints included).

        Raises :class:`NonConvergentIntegral` when an improper part diverges.
        """
        a, b = float(region[0]), float(region[1])
        total = 0.0
        for at in self.atoms:
            if a <= at.location <= b:
                total += at.mass * float(np.asarray(fn(np.array([at.location])))[0])
        for d in self.densities:
            lo_c = max(d.lo, a)
            hi_c = min(d.hi, b)
            if hi_c <= lo_c:
                continue
            singular = d.singular_lo and lo_c == d.lo
            g = (lambda f, dd: (lambda z: np.asarray(f(z), float) * dd.fn(z)))(fn, d)
            total += integrate_interval(g, lo_c, hi_c, rel_tol=rel_tol, ceiling=ceiling,
                                        singular_lo=singular, breakpoints=breakpoints)
        return total

    def tail_mass(self, u: float, *, rel_tol: float = DEFAULT_REL_TOL) -> float:
        """Mass of [u, inf); finite whenever u > 0 under hypothesis F0."""
        return self.integrate(lambda z: np.ones_like(np.asarray(z, float)),
                              region=(u, _INF), rel_tol=rel_tol)

    def validate_f0(self, *, rel_tol: float = DEFAULT_REL_TOL,
                    ceiling: float = DEFAULT_CEILING) -> float:
        """Check the square-truncation integrability at construction time.

        Returns the integral of z^2 ^ 1 or raises :class:`MeasureError`.
        """
        try:
            return self.integrate(lambda z: np.minimum(z * z, 1.0),
                                  rel_tol=rel_tol, ceiling=ceiling, breakpoints=(1.0,))
        except NonConvergentIntegral as exc:
            raise MeasureError(f"measure violates the z^2 ^ 1 integrability: {exc}") from exc

    @classmethod
    def checked(cls, atoms=(), densities=()) -> "JumpMeasure":
        m = cls(atoms=tuple(atoms), densities=tuple(densities))
        m.validate_f0()
        return m


# ---------------------------------------------------------------------------
# joint measures on the quadrant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointAtom:
    u1: float
    u2: float
    mass: float

    def __post_init__(self):
        if self.u1 < 0 or self.u2 < 0 or (self.u1 == 0 and self.u2 == 0):
            raise MeasureError("joint atom must lie in the quadrant minus the origin")
        if not (self.mass > 0):
            raise MeasureError("joint atom mass must be > 0")


@dataclass(frozen=True, eq=False)
class CurvePart:
    """Push-forward of ``base`` under u -> (c1*u, c2*u), with c1, c2 >= 0."""

    base: JumpMeasure
    c1: float
    c2: float

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0 or (self.c1 == 0 and self.c2 == 0):
            raise MeasureError("curve coefficients must be nonnegative, not both zero")


@dataclass(frozen=True, eq=False)
class JointJumpMeasure:
    atoms: tuple[JointAtom, ...] = ()
    curves: tuple[CurvePart, ...] = ()

    @classmethod
    def zero(cls) -> "JointJumpMeasure":
        return cls()

    @classmethod
    def from_atoms(cls, triples) -> "JointJumpMeasure":
        return cls(atoms=tuple(JointAtom(float(a), float(b), float(m))
                               for (a, b), m in triples))

    @classmethod
    def atom(cls, location: tuple[float, float], mass: float = 1.0) -> "JointJumpMeasure":
        return cls.from_atoms([(location, mass)])

    @classmethod
    def image_of(cls, mu: JumpMeasure, q: float) -> "JointJumpMeasure":
        """Image of ``mu`` under u -> (q*u, (1-q)*u), the sex-partition map."""
        if not (0.0 < q < 1.0):
            raise MeasureError("sex ratio q must lie in (0, 1)")
        return cls(curves=(CurvePart(mu, q, 1.0 - q),))

    @classmethod
    def on_axis(cls, measure: JumpMeasure, axis: int) -> "JointJumpMeasure":
        """Embed a 1-d measure on coordinate ``axis`` (1 or 2)."""
        if axis not in (1, 2):
            raise MeasureError("axis must be 1 or 2")
        if measure.is_zero:
            return cls.zero()
        c1, c2 = (1.0, 0.0) if axis == 1 else (0.0, 1.0)
        return cls(curves=(CurvePart(measure, c1, c2),))

    def __add__(self, other: "JointJumpMeasure") -> "JointJumpMeasure":
        return JointJumpMeasure(atoms=self.atoms + other.atoms,
                                curves=self.curves + other.curves)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.curves

    def integrate(self, fn2, region=((0.0, _INF), (0.0, _INF)), *,
                  rel_tol: float = DEFAULT_REL_TOL,
                  ceiling: float = DEFAULT_CEILING) -> float:
        """Integral of the vectorized ``fn2(u1, u2)`` over a closed rectangle."""
        (a1, b1), (a2, b2) = region
        total = 0.0
        for at in self.atoms:
            if a1 <= at.u1 <= b1 and a2 <= at.u2 <= b2:
                total += at.mass * float(np.asarray(
                    fn2(np.array([at.u1]), np.array([at.u2])))[0])
        for cv in self.curves:
            lo, hi = 0.0, _INF
            if cv.c1 > 0:
                lo, hi = max(lo, a1 / cv.c1), min(hi, b1 / cv.c1)
            elif not (a1 <= 0.0 <= b1):
                continue
            if cv.c2 > 0:
                lo, hi = max(lo, a2 / cv.c2), min(hi, b2 / cv.c2)
            elif not (a2 <= 0.0 <= b2):
                continue
            if hi <= lo:
                continue
            g = (lambda f, c: (lambda u: f(c.c1 * np.asarray(u, float),
                                           c.c2 * np.asarray(u, float))))(fn2, cv)
            total += cv.base.integrate(g, region=(lo, hi), rel_tol=rel_tol, ceiling=ceiling)
        return total

    def marginal(self, axis: int) -> JumpMeasure:
        """Coordinate marginal as a measure on (0, inf); mass at 0 is dropped."""
        if axis not in (1, 2):
            raise MeasureError("axis must be 1 or 2")
        out = JumpMeasure.zero()
        for at in self.atoms:
            loc = at.u1 if axis == 1 else at.u2
            if loc > 0:
                out = out + JumpMeasure.atom(loc, at.mass)
        for cv in self.curves:
            c = cv.c1 if axis == 1 else cv.c2
            if c > 0:
                out = out + cv.base.scaled(c)
        return out

    def validate_integrability(self, *, rel_tol: float = DEFAULT_REL_TOL,
                               ceiling: float = DEFAULT_CEILING) -> float:
        """Check the 1 ^ (u1^2+u2^2) integrability; raises on divergence."""
        try:
            return self.integrate(lambda u1, u2: np.minimum(1.0, u1 * u1 + u2 * u2),
                                  rel_tol=rel_tol, ceiling=ceiling)
        except NonConvergentIntegral as exc:
            raise MeasureError(
                f"joint measure violates the 1 ^ |u|^2 integrability: {exc}") from exc

    @classmethod
    def checked(cls, atoms=(), curves=()) -> "JointJumpMeasure":
        m = cls(atoms=tuple(atoms), curves=tuple(curves))
        m.validate_integrability()
        return m


def combine_nu(nu_f: JumpMeasure, nu_m: JumpMeasure,
               nu_S: JointJumpMeasure) -> JointJumpMeasure:
    """The combined jump measure: nu_f on the first axis, nu_m on the second,
    plus the joint part."""
    return (JointJumpMeasure.on_axis(nu_f, 1)
            + JointJumpMeasure.on_axis(nu_m, 2)
            + nu_S)


def integrate(measure, integrand, region=None, rel_tol: float = DEFAULT_REL_TOL):
    """Moment integral against a 1-d or joint measure (dispatching wrapper)."""
    if isinstance(measure, JumpMeasure):
        reg = region if region is not None else (0.0, _INF)
        return measure.integrate(integrand, region=reg, rel_tol=rel_tol)
    if isinstance(measure, JointJumpMeasure):
        reg = region if region is not None else ((0.0, _INF), (0.0, _INF))
        return measure.integrate(integrand, region=reg, rel_tol=rel_tol)
    raise TypeError(f"not a measure: {measure!r}")


# ---------------------------------------------------------------------------
# condition verdicts and checkers
# ---------------------------------------------------------------------------

class Status(str, Enum):
    SATISFIED = "SATISFIED"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ConditionVerdict:
    status: Status
    method: str  # 'exact-rule' | 'sufficient-condition' | 'numeric-scan'
    witness: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.status is Status.SATISFIED

    def __str__(self) -> str:
        extra = f" [{self.witness.get('rule')}]" if "rule" in self.witness else ""
        return f"{self.status.value} via {self.method}{extra}"


def default_scan_grid(k_max: int = 40) -> np.ndarray:
    """Dyadic scan grid a_k = 2^-k, k = 1..k_max."""
    return 0.5 ** np.arange(1, k_max + 1)


def check_F0(lam: JumpMeasure, *, rel_tol: float = DEFAULT_REL_TOL,
             ceiling: float = DEFAULT_CEILING) -> ConditionVerdict:
    """Square-truncation integrability of a 1-d jump measure."""
    try:
        val = lam.integrate(lambda z: np.minimum(z * z, 1.0),
                            rel_tol=rel_tol, ceiling=ceiling, breakpoints=(1.0,))
    except NonConvergentIntegral as exc:
        return ConditionVerdict(Status.VIOLATED, "numeric-scan",
                                witness={"divergence": str(exc)})
    method = "exact-rule" if not lam.densities else "numeric-scan"
    return ConditionVerdict(Status.SATISFIED, method, witness={"integral": val})


def check_first_moment(nu: JointJumpMeasure, *, rel_tol: float = DEFAULT_REL_TOL,
                       ceiling: float = DEFAULT_CEILING) -> ConditionVerdict:
    """First-moment integrability of the combined measure, with the two
    weaker variants reported as flags:

    * ``before_explosion``: 1 ^ (u1+u2) integrable (convergence holds up to
      the explosion time),
    * ``no_explosion``: (u1^2+u2^2) ^ (u1+u2) integrable (no explosion).
    """
    def run(fn2) -> ConditionVerdict:
        try:
            v = nu.integrate(fn2, rel_tol=rel_tol, ceiling=ceiling)
        except NonConvergentIntegral as exc:
            return ConditionVerdict(Status.VIOLATED, "numeric-scan",
                                    witness={"divergence": str(exc)})
        method = "exact-rule" if not any(cv.base.densities for cv in nu.curves) else "numeric-scan"
        return ConditionVerdict(Status.SATISFIED, method, witness={"integral": v})

    main = run(lambda u1, u2: u1 + u2)
    main.flags["before_explosion"] = run(lambda u1, u2: np.minimum(1.0, u1 + u2))
    main.flags["no_explosion"] = run(
        lambda u1, u2: np.minimum(u1 * u1 + u2 * u2, u1 + u2))
    return main


def _z_wedge_one_finite(lam: JumpMeasure, rel_tol: float, ceiling: float):
    """Integral of z ^ 1, or None when it diverges."""
    try:
        return lam.integrate(lambda z: np.minimum(z, 1.0), rel_tol=rel_tol,
                             ceiling=ceiling, breakpoints=(1.0,))
    except NonConvergentIntegral:
        return None


def _bounded_ratio_scan(values: np.ndarray) -> bool:
    """Heuristic boundedness of a ratio sequence sampled along a -> 0.

    Accepts when the small-a half does not exceed the large-a half by more
    than a modest factor (the sup is then numerically stable)."""
    vals = np.asarray(values, float)
    if vals.size < 6 or not np.all(np.isfinite(vals)):
        return False
    half = vals.size // 2
    head = np.max(vals[:half])
    tail = np.max(vals[half:])
    return tail <= 1.25 * head + 1e-12


def check_F6(lam: JumpMeasure, epsilon0: float = 1.0, scan_grid=None, *,
             rel_tol: float = DEFAULT_REL_TOL, ceiling: float = DEFAULT_CEILING,
             decay_floor: float = 1e-6) -> ConditionVerdict:
    """Small-jump control condition.

    Decision pipeline, in order:

    * R1 (exact sufficient rule): z ^ 1 integrable.
    * R2 (sufficient rule for density small parts): the partial square moment
      m2(a) satisfies sup m2(a)/a < inf near 0.
    * R3 (logarithm-form sufficient rule): sup over small a of
      int_a^{a0} z dlam / (-log m2(a)) < inf.
    * Direct scan of the estimand exp(eps0 * int_a^1 z dlam) * m2(a) on the
      grid: decay below ``decay_floor`` (relative to the first grid point) is
      evidence for SATISFIED; sustained growth is evidence for VIOLATED.

    The liminf in the hypothesis is along a subsequence, so the scan can only
    provide evidence; anything else is INCONCLUSIVE.
    """
    if scan_grid is None:
        scan_grid = default_scan_grid()
    grid = np.asarray(scan_grid, float)
    if grid.size < 2 or np.any(np.diff(grid) >= 0) or np.any(grid <= 0):
        raise ValueError("scan_grid must be positive and strictly decreasing")
    if epsilon0 <= 0:
        raise ValueError("epsilon0 must be positive")

    # R1
    zw1 = _z_wedge_one_finite(lam, rel_tol, ceiling)
    if zw1 is not None:
        return ConditionVerdict(Status.SATISFIED, "sufficient-condition",
                                witness={"rule": "R1", "z_wedge_one": zw1})

    if not check_F0(lam, rel_tol=rel_tol, ceiling=ceiling):
        raise UnsupportedForm("the square-truncation integral diverges; "
                              "the scan estimand is not defined")

    # small-a region free of atoms, below which only densities carry mass
    a0 = min([1.0] + [a.location for a in lam.atoms])
    small = grid[grid < a0]
    if small.size < 6:
        raise UnsupportedForm("scan grid has too few points below the last atom")

    m2 = np.array([lam.integrate(lambda z: z * z, region=(0.0, a),
                                 rel_tol=rel_tol, ceiling=ceiling) for a in small])

    # R2
    if _bounded_ratio_scan(m2 / small):
        return ConditionVerdict(
            Status.SATISFIED, "sufficient-condition",
            witness={"rule": "R2", "ratios": (m2 / small).tolist(),
                     "grid": small.tolist()})

    # R3, anchored where m2 is safely below 1
    idx0 = np.argmax(m2 < math.exp(-1.0))
    if m2[idx0] < math.exp(-1.0) and small.size - idx0 >= 6:
        anchor = small[idx0]
        sub = small[idx0 + 1:]
        num = np.array([lam.integrate(lambda z: z, region=(a, anchor),
                                      rel_tol=rel_tol, ceiling=ceiling) for a in sub])
        den = -np.log(m2[idx0 + 1:])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(den > 0, num / den, np.inf)
        if _bounded_ratio_scan(ratios):
            return ConditionVerdict(
                Status.SATISFIED, "sufficient-condition",
                witness={"rule": "R3", "ratios": ratios.tolist(), "grid": sub.tolist()})

    # direct scan of the estimand, in log space
    i1 = np.array([lam.integrate(lambda z: z, region=(a, 1.0),
                                 rel_tol=rel_tol, ceiling=ceiling) for a in small])
    with np.errstate(divide="ignore"):
        log_e = epsilon0 * i1 + np.log(m2)
    witness = {"grid": small.tolist(), "log_estimand": log_e.tolist(),
               "epsilon0": epsilon0}

    if np.min(log_e) <= log_e[0] + math.log(decay_floor):
        return ConditionVerdict(Status.SATISFIED, "numeric-scan", witness=witness)

    half = small.size // 2
    tail = log_e[half:]
    nondecreasing = np.all(np.diff(tail) >= -1e-9)
    decade_growth = tail[-1] - tail[0] >= math.log(10.0)
    if nondecreasing and decade_growth and log_e[-1] >= log_e[0]:
        return ConditionVerdict(Status.VIOLATED, "numeric-scan", witness=witness)

    return ConditionVerdict(Status.INCONCLUSIVE, "numeric-scan", witness=witness)


def check_F6_sum(lambda1: JumpMeasure, lambda2: JumpMeasure,
                 epsilon0: float = 1.0, scan_grid=None, *,
                 rel_tol: float = DEFAULT_REL_TOL,
                 ceiling: float = DEFAULT_CEILING) -> ConditionVerdict:
    """Small-jump control for a sum of measures.

    Combination rule first: if one summand passes the small-jump control and
    the other has a finite z ^ 1 moment, the sum passes.  Falls back to the
    direct check on the summed measure.
    """
    for first, second, order in ((lambda1, lambda2, "1+2"), (lambda2, lambda1, "2+1")):
        zw = _z_wedge_one_finite(second, rel_tol, ceiling)
        if zw is None:
            continue
        v = check_F6(first, epsilon0, scan_grid, rel_tol=rel_tol, ceiling=ceiling)
        if v:
            return ConditionVerdict(
                Status.SATISFIED, "sufficient-condition",
                witness={"rule": "combination", "order": order,
                         "component": v.witness}, flags={"component": v})
    return check_F6(lambda1 + lambda2, epsilon0, scan_grid,
                    rel_tol=rel_tol, ceiling=ceiling)


# ---------------------------------------------------------------------------
# tail sampling
# ---------------------------------------------------------------------------

class TailSampler:
    """Inverse-CDF sampler for a 1-d measure restricted to [cut, inf).

    Atoms are sampled exactly; density parts through a tabulated quantile
    function (piecewise-linear on a geometric grid, ``table_points`` cells),
    which is the documented approximation for density-driven jump sizes.
    """

    def __init__(self, measure: JumpMeasure, cut: float, table_points: int = 512,
                 tail_tol: float = 1e-12):
        if cut <= 0 and any(d.lo == 0.0 for d in measure.densities):
            raise MeasureError("tail sampling of a density part requires cut > 0")
        comps = []  # (mass, kind, payload)
        for at in measure.atoms:
            if at.location >= cut:
                comps.append((at.mass, "atom", at.location))
        for d in measure.densities:
            lo = max(d.lo, cut)
            hi = d.hi
            if hi <= lo:
                continue
            if not np.isfinite(hi):
                # find a finite horizon capturing all but tail_tol of the mass
                hi = max(2.0 * lo, 1.0)
                part_mass = None
                for _ in range(200):
                    m_in = integrate_interval(d.fn, lo, hi, rel_tol=1e-10)
                    m_out = integrate_interval(d.fn, hi, _INF, rel_tol=1e-10)
                    part_mass = m_in + m_out
                    if m_out <= tail_tol * max(part_mass, 1e-300):
                        break
                    hi *= 2.0
            grid = np.geomspace(lo, hi, table_points + 1)
            panel = np.array([integrate_interval(d.fn, a, b, rel_tol=1e-10)
                              for a, b in zip(grid[:-1], grid[1:])])
            cum = np.concatenate([[0.0], np.cumsum(panel)])
            if cum[-1] > 0:
                comps.append((cum[-1], "table", (grid, cum)))
        comps.sort(key=lambda c: (c[1] != "atom", c[2] if c[1] == "atom" else 0.0))
        self.components = comps
        self.total_mass = float(sum(c[0] for c in comps))
        self._cum = np.cumsum([c[0] for c in comps]) if comps else np.array([])

    def sample(self, uniforms) -> np.ndarray:
        """Map uniforms in (0,1) to jump sizes of the normalized restriction."""
        u = np.atleast_1d(np.asarray(uniforms, float))
        if self.total_mass <= 0:
            raise MeasureError("cannot sample from an empty tail")
        w = u * self.total_mass
        idx = np.searchsorted(self._cum, w, side="left")
        idx = np.minimum(idx, len(self.components) - 1)
        out = np.empty_like(w)
        for i, (mass, kind, payload) in enumerate(self.components):
            sel = idx == i
            if not np.any(sel):
                continue
            if kind == "atom":
                out[sel] = payload
            else:
                grid, cum = payload
                lo_cum = self._cum[i] - mass
                local = w[sel] - lo_cum
                j = np.searchsorted(cum, local, side="right") - 1
                j = np.clip(j, 0, len(grid) - 2)
                seg = cum[j + 1] - cum[j]
                frac = np.where(seg > 0, (local - cum[j]) / np.where(seg > 0, seg, 1.0), 0.0)
                out[sel] = grid[j] + frac * (grid[j + 1] - grid[j])
        return out
