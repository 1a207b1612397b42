"""Rotation-number estimation, winding counts, plateaus and analytic brackets.

The estimator follows the lift directly. Each replicate contributes its
winding count ``W = trunc(G^n(x0) - x0)`` divided by ``n``, so the resolution
is ``1/n`` and a confined orbit gives exactly zero. The raw displacement
differs from ``W`` by less than one and is kept alongside.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bottleneck import C1_constant, scaling_exponent
from .disorder import DisorderMeasure, default_bad_set, default_good_threshold, sample_word
from .dynamics import LiftFamily, local_bounds, orbit_chunk
from .errors import NumericOverflowError, ParameterDomainError
from .parallel import ordered_map

DEFAULT_CHUNK = 1 << 16
ADAPTIVE_CAP = 10**9
ADAPTIVE_WINDINGS = 50


def _winding(displacement):
    # truncation, so an orbit confined to (x0 - 1, x0 + 1) counts zero crossings
    return int(math.trunc(displacement))


@dataclass
class RotationEstimate:
    E: float
    rho_hat: float
    values: list
    replicates: int
    n: int
    windings: int
    stderr: float
    seed: int
    x0: float = 0.0
    x_min: float = math.nan
    x_max: float = math.nan
    family: str = ""
    measure: str = ""
    per_replicate_windings: list = field(default_factory=list)
    displacements: list = field(default_factory=list)

    def csv_row(self):
        return {
            "E": self.E, "rho_hat": self.rho_hat, "stderr": self.stderr, "windings": self.windings,
            "n": self.n, "replicates": self.replicates, "seed": self.seed,
            "family": self.family, "measure": self.measure,
        }

    def to_dict(self):
        return asdict(self)


CSV_COLUMNS = ("E", "rho_hat", "stderr", "windings", "n", "replicates", "seed", "family", "measure")


def _check_inputs(family: LiftFamily, E, measure: DisorderMeasure):
    if not family.in_box(E):
        raise ParameterDomainError(f"E={E} outside the box of {family.name!r}")
    if measure.d != family.d:
        raise ParameterDomainError(f"measure dimension {measure.d} != family dimension {family.d}")
    lo, hi = measure.support_box()
    if np.any(lo < np.asarray(family.y_box[0])) or np.any(hi > np.asarray(family.y_box[1])):
        raise ParameterDomainError(f"supp(mu) = [{lo}, {hi}] is not inside the y-box of {family.name!r}")


class _Replicate:
    """Running orbit of one replicate on its own stream; can be advanced in chunks."""

    def __init__(self, family, E, measure, seed, stream, x0):
        self.family, self.E, self.measure = family, E, measure
        self.seed, self.stream = seed, stream
        self.x0 = self.x = float(x0)
        self.lo = self.hi = self.x
        self.steps = 0

    def advance(self, n, chunk=DEFAULT_CHUNK):
        done = 0
        while done < n:
            m = min(chunk, n - done)
            letters = sample_word(self.measure, self.seed, m, stream=self.stream, start=self.steps)
            x, lo, hi = orbit_chunk(self.family, self.E, letters, self.x)
            if not (math.isfinite(x) and math.isfinite(lo) and math.isfinite(hi)):
                raise NumericOverflowError(f"non-finite orbit value for family {self.family.name!r}")
            self.x, self.lo, self.hi = x, min(self.lo, lo), max(self.hi, hi)
            self.steps += m
            done += m
        return self

    @property
    def displacement(self):
        return self.x - self.x0


def _summarise(E, reps, seed, family, measure):
    winds = [_winding(r.displacement) for r in reps]
    vals = [w / r.steps for w, r in zip(winds, reps)]
    R = len(vals)
    rho = math.fsum(vals) / R
    stderr = float(np.std(vals, ddof=1) / math.sqrt(R)) if R > 1 else math.nan
    return RotationEstimate(
        E=float(E), rho_hat=rho, values=vals, replicates=R, n=reps[0].steps, windings=sum(winds),
        stderr=stderr, seed=int(seed), x0=reps[0].x0,
        x_min=min(r.lo for r in reps), x_max=max(r.hi for r in reps),
        family=family.name, measure=measure.label(), per_replicate_windings=winds,
        displacements=[r.displacement for r in reps],
    )


def estimate_rotation_number(family: LiftFamily, E, measure: DisorderMeasure, n, replicates=1, x0=0.0,
                             seed=0, chunk=DEFAULT_CHUNK, threads=None) -> RotationEstimate:
    """Finite-``n`` estimate of ``rho(E)`` from ``replicates`` independent words.

    Replicate ``r`` uses stream ``r`` of ``seed``, so results do not depend on
    the thread count or completion order.
    """
    if n < 1 or replicates < 1:
        raise ParameterDomainError("need n >= 1 and replicates >= 1")
    _check_inputs(family, E, measure)

    def run(r):
        return _Replicate(family, E, measure, seed, r, x0).advance(int(n), chunk)

    reps = ordered_map(run, range(int(replicates)), threads)
    return _summarise(E, reps, seed, family, measure)


@dataclass
class AdaptiveEstimate:
    estimate: RotationEstimate
    capped: bool
    total_steps: int
    upper_bound: float | None = None
    confidence: float = 0.95


def poisson_upper_rate(windings, steps, confidence=0.95):
    """One-sided upper confidence bound on a crossing rate from ``windings`` in ``steps``."""
    from scipy.stats import chi2

    return float(chi2.ppf(confidence, 2 * (windings + 1)) / 2 / steps)


def estimate_rotation_adaptive(family, E, measure, replicates=1, x0=0.0, seed=0, min_windings=ADAPTIVE_WINDINGS,
                               cap=ADAPTIVE_CAP, start_n=DEFAULT_CHUNK, chunk=DEFAULT_CHUNK, threads=None):
    """Run until ``min_windings`` total crossings or ``cap`` total steps.

    The orbit length doubles each round. When capped, the result carries a
    one-sided upper bound on ``rho`` instead of pretending to resolve it.
    """
    if replicates < 1 or cap < replicates:
        raise ParameterDomainError("need replicates >= 1 and cap >= replicates")
    _check_inputs(family, E, measure)
    reps = [_Replicate(family, E, measure, seed, r, x0) for r in range(int(replicates))]
    per = max(1, min(int(start_n), cap // replicates))
    while True:
        ordered_map(lambda rep: rep.advance(per - rep.steps, chunk), reps, threads)
        est = _summarise(E, reps, seed, family, measure)
        total = per * len(reps)
        if abs(est.windings) >= min_windings:
            return AdaptiveEstimate(est, False, total)
        if total >= cap or 2 * per * len(reps) > cap:
            wins = max(est.windings, 0)
            return AdaptiveEstimate(est, True, total, poisson_upper_rate(wins, total))
        per *= 2


@dataclass
class BacktrackingResult:
    ok: bool
    infimum: float
    witness: dict | None
    trials: int
    length: int


def check_no_backtracking(family, E, measure, trials=10**4, length=10**3, seed=0, threads=None):
    """Search for orbits from ``x0 >= 0`` that fall to ``-1`` or below.

    Starts are uniform in ``[0, 1)`` from stream 0; trial ``i`` uses the word on
    stream ``i + 1``. Returns the smallest orbit value seen and, on failure, the
    first offending trial.
    """
    if not E >= 0:
        raise ParameterDomainError("no-backtracking is checked for E >= 0")
    if trials < 1 or length < 1:
        raise ParameterDomainError("need trials >= 1 and length >= 1")
    _check_inputs(family, E, measure)
    starts = sample_word(DisorderMeasure("uniform-box", d=1, M=(1.0,)), seed, trials)[:, 0]

    def run(i):
        letters = sample_word(measure, seed, length, stream=i + 1)
        trace = np.empty(length)
        _, lo, _ = orbit_chunk(family, E, letters, starts[i], trace)
        return lo, trace

    inf, witness = math.inf, None
    batch = 256
    for b0 in range(0, trials, batch):
        idx = range(b0, min(trials, b0 + batch))
        for i, (lo, trace) in zip(idx, ordered_map(run, idx, threads)):
            if lo < inf:
                inf = lo
            if witness is None and lo <= -1:
                step = int(np.argmax(trace <= -1)) + 1
                witness = {"trial": i, "x0": float(starts[i]), "step": step, "value": float(trace[step - 1]),
                           "stream": i + 1, "seed": int(seed)}
    return BacktrackingResult(witness is None, float(inf), witness, int(trials), int(length))


@dataclass
class PlateauResult:
    plateau: bool
    windings: dict
    n: int

    def __bool__(self):
        return self.plateau


def detect_plateau(family, measure, E_list, n=10**7, replicates=1, x0=0.0, seed=0, threads=None):
    """``True`` iff every listed ``E < 0`` shows zero windings over the full budget."""
    E_list = [float(E) for E in E_list]
    if not E_list:
        raise ParameterDomainError("E_list is empty")
    if any(E >= 0 for E in E_list):
        raise ParameterDomainError("plateau detection takes negative energies only")
    winds = {}
    for E in E_list:
        est = estimate_rotation_number(family, E, measure, n, replicates, x0, seed, threads=threads)
        winds[E] = sum(abs(w) for w in est.per_replicate_windings)
    return PlateauResult(all(w == 0 for w in winds.values()), winds, int(n))


# --- analytic brackets ------------------------------------------------------


@dataclass
class RotationBracket:
    E: float
    k: int
    N: int
    N_prime: int
    ln_lower: float
    ln_upper: float
    constants: dict

    @property
    def lower(self):
        return math.exp(self.ln_lower)

    @property
    def upper(self):
        return math.exp(self.ln_upper)

    @property
    def ordered(self):
        return self.ln_lower <= self.ln_upper


def rotation_bracket(E, k, constants) -> RotationBracket:
    """``(1/N)(C (bE)^l)^N <= rho(E) <= (1/N')(1 - p1)^(N')`` in log space."""
    A, a, b, C, l, p1 = (float(constants[key]) for key in ("A", "a", "b", "C", "l", "p1"))
    if not E > 0:
        raise ParameterDomainError("E must be positive")
    if min(A, a, b, C, l) <= 0 or not 0 < p1 < 1:
        raise ParameterDomainError("constants must be positive and p1 in (0, 1)")
    s = E ** -scaling_exponent(k)
    N = math.ceil(A * s)
    Np = math.floor(a * s)
    if Np < 1:
        raise ParameterDomainError(f"N' = floor(a E^-(2k-1)/(2k)) = {Np}; need N' >= 1")
    good = math.log(C) + l * math.log(b * E)
    ln_lower = -math.log(N) + N * good
    ln_upper = -math.log(Np) + Np * math.log1p(-p1)
    return RotationBracket(float(E), int(k), N, Np, ln_lower, ln_upper,
                           {"A": A, "a": a, "b": b, "C": C, "l": l, "p1": p1})


def default_bracket_constants(family: LiftFamily, measure: DisorderMeasure, delta=0.05):
    """Constructive defaults: ``A = 2 C1(c1)``, ``a = C2(c2) / 2`` and ``b, p1`` from the block rules."""
    bounds = local_bounds(family, delta)
    b = default_good_threshold(bounds, family.d)
    bad = default_bad_set(family, measure)
    return {
        "A": 2 * C1_constant(family.k, bounds.c1),
        "a": 1 / (bounds.c2 + 1) / 2,
        "b": b,
        "C": measure.C,
        "l": measure.l,
        "p1": bad.p1,
    }


def bracket_slopes(E_grid, k, constants):
    """Finite-difference slopes of ``ln(-ln lower)`` and ``ln(-ln upper)`` against ``ln E``.

    Returns ``(midpoints, lower_slopes, upper_slopes)`` on consecutive grid pairs.
    """
    Es = np.sort(np.asarray(E_grid, float))[::-1]
    brs = [rotation_bracket(E, k, constants) for E in Es]
    lx = np.log(Es)
    zl = np.log([-br.ln_lower for br in brs])
    zu = np.log([-br.ln_upper for br in brs])
    mid = np.exp((lx[1:] + lx[:-1]) / 2)
    return mid, np.diff(zl) / np.diff(lx), np.diff(zu) / np.diff(lx)
