"""Passage times through the parabolic collar and their explicit bounds.

For maps ``f_j(x) >= x + lam x^(2k) + eps`` the orbit of ``-delta`` reaches
``delta`` within ``N1 = ceil(C1 eps^(-(2k-1)/(2k)))`` steps; for
``f_j(x) <= x + Lam x^(2k) + eps`` the orbit of ``-eps^(1/(2k))`` stays below 0
for ``N2 = floor(C2 eps^(-(2k-1)/(2k)))`` steps.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .dynamics import LiftFamily
from .errors import BudgetExhausted, InsufficientData, ParameterDomainError
from .parallel import ordered_map

DEFAULT_CAP = 10**9
MODES = ("lower", "upper", "family")

# guards ceil/floor against products that equal an integer up to rounding
_ROUND_GUARD = 1e-12


def scaling_exponent(k):
    return (2 * k - 1) / (2 * k)


def _check_k(k):
    if int(k) != k or k < 1:
        raise ParameterDomainError("k must be a positive integer")
    return int(k)


def C1_constant(k, lam):
    k = _check_k(k)
    if not lam > 0:
        raise ParameterDomainError("lambda must be positive")
    q = 2 ** (2 * k - 1)
    return 1 / (lam * (2 * k - 1)) + 2 + q / (lam * (q - 1)) + 1


def bound_N1(k, lam, eps):
    """``(C1, N1)`` of the lower-envelope passage bound."""
    if not eps > 0:
        raise ParameterDomainError("eps must be positive")
    C1 = C1_constant(k, lam)
    v = C1 * eps ** -scaling_exponent(k)
    return C1, math.ceil(v * (1 - _ROUND_GUARD))


def bound_N2(k, Lam, eps):
    """``(C2, N2)`` with ``C2 = 1 / (Lam + 1)``."""
    k = _check_k(k)
    if Lam < 0 or not eps > 0:
        raise ParameterDomainError("need Lam >= 0 and eps > 0")
    C2 = 1 / (Lam + 1)
    return C2, math.floor(C2 * eps ** -scaling_exponent(k) * (1 + _ROUND_GUARD))


@dataclass(frozen=True)
class BottleneckMap:
    """Maps driving a passage through ``[-delta, delta]``.

    ``lower``/``upper`` iterate ``x + coef * x^(2k) + eps`` exactly (the two
    envelopes coincide as maps; the mode says which bound is being probed).
    ``family`` applies ``G_{E, y_j}`` with letters from ``measure``; ``coef``
    and ``eps`` are then the envelope constants used for the collar and bounds.
    """

    k: int
    coef: float
    eps: float
    delta: float
    mode: str = "lower"
    family: LiftFamily | None = None
    E: float | None = None
    measure: object = None
    seed: int = 0

    def __post_init__(self):
        _check_k(self.k)
        if self.mode not in MODES:
            raise ParameterDomainError(f"mode must be one of {MODES}")
        if not (self.eps > 0 and self.delta > 0 and self.coef >= 0):
            raise ParameterDomainError("need eps > 0, delta > 0, coef >= 0")
        if self.mode == "family" and (self.family is None or self.E is None or self.measure is None):
            raise ParameterDomainError("family mode needs family, E and measure")

    @property
    def collar(self):
        return self.eps ** (1 / (2 * self.k))

    @property
    def in_regime(self):
        """``eps^(1/(2k)) < delta / 2``: the operational small-eps condition."""
        return self.collar < self.delta / 2


@dataclass
class PassageTimeReport:
    steps_total: int
    M1: int
    M2: int
    M3: int
    N1: int | None
    N2: int
    C1: float | None
    C2: float
    start: float
    target: float
    x_final: float
    collar: float
    eps: float
    k: int
    coef: float
    in_regime: bool
    extra: dict = field(default_factory=dict)

    @property
    def collar_steps(self):
        return self.M2

    def to_dict(self):
        return asdict(self)


def _phases(steps, first_in, first_out):
    m1 = steps if first_in < 0 else first_in
    if first_out < 0:
        return m1, steps - m1, 0
    return m1, first_out - m1, steps - first_out


def _family_passage(bmap, start, target, cap, chunk=4096):
    from .disorder import sample_word

    fam, E = bmap.family, bmap.E
    w = bmap.collar
    x = float(start)
    n, first_in, first_out = 0, -1, -1
    if x >= -w:
        first_in = 0
    if x > w:
        first_out = 0
    pos = 0
    while x < target:
        letters = sample_word(bmap.measure, bmap.seed, chunk, start=pos)
        pos += chunk
        for y in letters:
            if n >= cap:
                return -1, first_in, first_out, x
            nx = float(fam.func(E, y, x))
            if not nx > x:
                raise ParameterDomainError(f"non-positive increment at x={x} (step {n})")
            x = nx
            n += 1
            if first_in < 0 and x >= -w:
                first_in = n
            if first_out < 0 and x > w:
                first_out = n
            if x >= target:
                break
    return n, first_in, first_out, x


def measure_passage(bmap: BottleneckMap, start, target, cap=DEFAULT_CAP):
    """Count steps from ``start`` until the orbit reaches ``target``.

    Phase 1 ends at the first step with ``x >= -eps^(1/(2k))``, phase 2 at the
    first with ``x > eps^(1/(2k))``; phase 3 runs to the target.
    """
    if not start < target:
        raise ParameterDomainError("start must be below target")
    if bmap.mode == "family":
        steps, fi, fo, x = _family_passage(bmap, start, target, cap)
    else:
        if bmap.coef == 0 and bmap.eps <= 0:
            raise ParameterDomainError("increments must be positive")
        steps, fi, fo, x = kernels.envelope_passage(
            2 * bmap.k, float(bmap.coef), float(bmap.eps), float(start), float(target), bmap.collar, int(cap)
        )
    if bmap.coef > 0:
        C1, N1 = bound_N1(bmap.k, bmap.coef, bmap.eps)
    else:
        C1, N1 = None, None
    C2, N2 = bound_N2(bmap.k, bmap.coef, bmap.eps)
    capped = steps < 0
    total = cap if capped else steps
    M1, M2, M3 = _phases(total, fi, fo)
    report = PassageTimeReport(
        steps_total=total, M1=M1, M2=M2, M3=M3, N1=N1, N2=N2, C1=C1, C2=C2,
        start=float(start), target=float(target), x_final=float(x), collar=bmap.collar,
        eps=float(bmap.eps), k=bmap.k, coef=float(bmap.coef), in_regime=bmap.in_regime,
    )
    if capped:
        raise BudgetExhausted(f"passage exceeded the step cap {cap}", partial=report)
    return report


@dataclass
class SweepResult:
    k: int
    coef: float
    delta: float
    reports: list
    slope: float
    intercept: float
    residual: float

    @property
    def eps(self):
        return [r.eps for r in self.reports]

    @property
    def steps(self):
        return [r.steps_total for r in self.reports]

    def rows(self):
        for r in self.reports:
            yield {
                "epsilon": r.eps, "k": r.k, "lambda": r.coef, "steps": r.steps_total,
                "M1": r.M1, "M2": r.M2, "M3": r.M3, "N1": r.N1, "N2": r.N2,
                "in_regime": int(r.in_regime),
            }


def loglog_slope(xs, ys):
    """Least-squares slope, intercept and max abs residual of ``ln y`` on ``ln x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return float(slope), float(intercept), residual


def scaling_sweep(k, lam, delta, eps_grid, start=None, target=None, cap=DEFAULT_CAP, threads=None):
    """Passage ``-delta -> delta`` for each ``eps`` and the fitted ``ln steps`` vs ``ln eps`` slope."""
    eps_grid = [float(e) for e in eps_grid]
    if len(eps_grid) < 2:
        raise InsufficientData("a scaling fit needs at least two epsilons")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ParameterDomainError("eps_grid must be strictly decreasing")
    start = -delta if start is None else start
    target = delta if target is None else target

    def one(eps):
        return measure_passage(BottleneckMap(k, lam, eps, delta), start, target, cap=cap)

    reports = ordered_map(one, eps_grid, threads)
    slope, intercept, residual = loglog_slope([r.eps for r in reports], [r.steps_total for r in reports])
    return SweepResult(int(k), float(lam), float(delta), reports, slope, intercept, residual)
