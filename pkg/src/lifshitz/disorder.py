"""Disorder measures, reproducible i.i.d. words, and good/bad blocks.

All measures are product measures on ``[0, inf)^d`` (or pushforwards of one
such coordinate by an affine map), so box probabilities and coordinate
tails are available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError
from .rng import Stream

KINDS = ("uniform-box", "power-law-box", "bernoulli-product", "pushforward-shift")

# epsilons on which declared (C, l) are checked
M2_TEST_EPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class DisorderMeasure:
    """A sampleable product measure for the random parameter ``y``.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    d : int
        Dimension of ``y``.
    M : tuple of float
        Per-coordinate support bound (upper end of ``[0, M_j]``). Unused for
        ``bernoulli-product``, where it is derived from the atoms.
    exponent : float
        ``q`` in the per-coordinate CDF ``(t/M)^q`` of ``power-law-box``.
    atoms, weights : tuple of float
        Per-coordinate atoms and probabilities of ``bernoulli-product``.
    base, scale, offset :
        ``pushforward-shift`` is the law of ``scale * x + offset`` with ``x``
        drawn from the one-dimensional ``base``; ``scale`` is +1 or -1.
    C, l : float, optional
        Declared density-at-zero constants; derived when omitted.
    """

    kind: str
    d: int = 1
    M: tuple = (1.0,)
    exponent: float = 1.0
    atoms: tuple = ()
    weights: tuple = ()
    base: "DisorderMeasure | None" = None
    scale: float = 1.0
    offset: float = 0.0
    C: float | None = None
    l: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterDomainError(f"unknown measure kind {self.kind!r}")
        if self.d < 1:
            raise ParameterDomainError("d must be a positive integer")
        if self.kind in ("uniform-box", "power-law-box"):
            M = tuple(float(m) for m in np.broadcast_to(np.asarray(self.M, float), (self.d,)))
            if any(not (m > 0 and math.isfinite(m)) for m in M):
                raise ParameterDomainError("support bounds M must be positive and finite")
            object.__setattr__(self, "M", M)
            if self.kind == "power-law-box" and not self.exponent > 0:
                raise ParameterDomainError("power-law exponent must be positive")
        elif self.kind == "bernoulli-product":
            atoms = tuple(float(a) for a in self.atoms)
            weights = tuple(float(w) for w in self.weights)
            if not atoms or len(atoms) != len(weights):
                raise ParameterDomainError("atoms and weights must be non-empty and of equal length")
            if any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, abs_tol=1e-12):
                raise ParameterDomainError("weights must be non-negative and sum to 1")
            if any(a < 0 for a in atoms):
                raise ParameterDomainError("atoms must lie in [0, inf)")
            object.__setattr__(self, "atoms", atoms)
            object.__setattr__(self, "weights", weights)
            object.__setattr__(self, "M", (max(atoms),) * self.d)
        else:
            if self.base is None or self.base.d != 1 or self.d != 1:
                raise ParameterDomainError("pushforward-shift needs a one-dimensional base")
            if self.scale not in (1.0, -1.0):
                raise ParameterDomainError("pushforward scale must be +1 or -1")
            lo, hi = self.base.support_box()
            ends = sorted((self.scale * lo[0] + self.offset, self.scale * hi[0] + self.offset))
            object.__setattr__(self, "M", (ends[1],))
        if self.C is None or self.l is None:
            C, l = self._derive_density_constants()
            if self.C is None:
                object.__setattr__(self, "C", C)
            if self.l is None:
                object.__setattr__(self, "l", l)

    # --- coordinate laws -------------------------------------------------

    def coord_interval_prob(self, lo, hi, closed_low=True, j=0):
        """``P(lo <= y_j <= hi)`` (``lo < y_j`` if not ``closed_low``)."""
        if hi < lo:
            return 0.0
        if self.kind == "uniform-box" or self.kind == "power-law-box":
            M = self.M[j]
            q = 1.0 if self.kind == "uniform-box" else self.exponent
            a = min(max(lo, 0.0), M) / M
            b = min(max(hi, 0.0), M) / M
            return b**q - a**q
        if self.kind == "bernoulli-product":
            return sum(
                w for a, w in zip(self.atoms, self.weights)
                if (a >= lo if closed_low else a > lo) and a <= hi
            )
        # pushforward: y = s*x + c
        s, c = self.scale, self.offset
        if s > 0:
            return self.base.coord_interval_prob(lo - c, hi - c, closed_low)
        # y in [lo, hi]  <=>  x in [c - hi, c - lo]
        return self.base.coord_interval_prob(c - hi, c - lo, True)

    def coord_sf(self, t, j=0):
        """``P(y_j >= t)``."""
        return self.coord_interval_prob(t, math.inf, j=j)

    def box_prob(self, eps):
        """Exact ``mu([0, eps]^d)``."""
        return math.prod(self.coord_interval_prob(0.0, eps, j=j) for j in range(self.d))

    def support_box(self):
        """Coordinate-aligned hull ``(lo, hi)`` of the support."""
        if self.kind == "bernoulli-product":
            pts = [a for a, w in zip(self.atoms, self.weights) if w > 0]
            return np.full(self.d, min(pts)), np.full(self.d, max(pts))
        if self.kind == "pushforward-shift":
            lo, hi = self.base.support_box()
            ends = sorted((self.scale * lo[0] + self.offset, self.scale * hi[0] + self.offset))
            return np.array([ends[0]]), np.array([ends[1]])
        return np.zeros(self.d), np.array(self.M)

    def support_points(self, per_axis=5):
        """Representative support points (all atoms, or a grid over the hull)."""
        if self.kind == "bernoulli-product":
            axis = np.array([a for a, w in zip(self.atoms, self.weights) if w > 0])
        elif self.kind == "pushforward-shift" and self.base.kind == "bernoulli-product":
            axis = self.scale * self.base.support_points()[:, 0] + self.offset
        else:
            lo, hi = self.support_box()
            axis = np.linspace(lo[0], hi[0], per_axis)
            if self.d > 1:
                axes = [np.linspace(lo[j], hi[j], per_axis) for j in range(self.d)]
                return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.d)
        return np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), -1).reshape(-1, self.d)

    # --- transforms -------------------------------------------------------

    def _from_uniform(self, u):
        if self.kind == "uniform-box":
            return u * np.asarray(self.M)
        if self.kind == "power-law-box":
            return np.asarray(self.M) * u ** (1.0 / self.exponent)
        if self.kind == "bernoulli-product":
            cum = np.cumsum(self.weights)
            idx = np.searchsorted(cum, u, side="right")
            idx = np.minimum(idx, len(self.atoms) - 1)
            return np.asarray(self.atoms)[idx]
        return self.scale * self.base._from_uniform(u) + self.offset

    # --- hypothesis checks ----------------------------------------------

    def check_m1(self):
        """Compact support in ``[0, inf)^d`` with at least two points."""
        lo, hi = self.support_box()
        nonneg = bool(np.all(lo >= 0))
        if self.kind == "bernoulli-product":
            two = sum(1 for w in self.weights if w > 0) >= 2
        elif self.kind == "pushforward-shift":
            two = self.base.check_m1() or bool(np.any(hi > lo))
        else:
            two = True
        return nonneg and two

    def check_m2(self, eps_values=M2_TEST_EPS):
        """True iff ``C eps^l <= mu([0, eps]^d)`` at every test epsilon."""
        if not (self.C > 0 and self.l > 0):
            return False
        return all(self.C * e**self.l <= self.box_prob(e) * (1 + 1e-12) for e in eps_values)

    def _derive_density_constants(self):
        if self.kind == "uniform-box":
            return 1.0 / math.prod(self.M), float(self.d)
        if self.kind == "power-law-box":
            return math.prod(m ** -self.exponent for m in self.M), self.exponent * self.d
        probs = np.array([self.box_prob(e) for e in M2_TEST_EPS])
        if np.any(probs <= 0):
            return 0.0, 1.0
        logs = np.log(np.array(M2_TEST_EPS))
        slope = float(np.polyfit(logs, np.log(probs), 1)[0])
        l = slope if slope > 0.05 else 1.0
        C = float(np.min(probs / np.array(M2_TEST_EPS) ** l))
        return C, l

    # --- serialization ----------------------------------------------------

    def to_dict(self):
        out = {"kind": self.kind, "d": self.d}
        if self.kind in ("uniform-box", "power-law-box"):
            out["M"] = list(self.M)
        if self.kind == "power-law-box":
            out["exponent"] = self.exponent
        if self.kind == "bernoulli-product":
            out["atoms"] = list(self.atoms)
            out["weights"] = list(self.weights)
        if self.kind == "pushforward-shift":
            out.update(base=self.base.to_dict(), scale=self.scale, offset=self.offset)
        out["C"] = self.C
        out["l"] = self.l
        return out

    @classmethod
    def from_dict(cls, spec):
        spec = dict(spec)
        kind = spec.pop("kind")
        allowed = {"d", "M", "exponent", "atoms", "weights", "base", "scale", "offset", "C", "l"}
        unknown = set(spec) - allowed
        if unknown:
            raise ParameterDomainError(f"unknown measure keys: {sorted(unknown)}")
        if "base" in spec:
            spec["base"] = cls.from_dict(spec["base"])
        for key in ("M", "atoms", "weights"):
            if key in spec:
                spec[key] = tuple(np.atleast_1d(spec[key]).tolist())
        return cls(kind=kind, **spec)

    def label(self):
        if self.kind == "uniform-box":
            return "uniform:" + ",".join(f"{m:g}" for m in self.M)
        if self.kind == "power-law-box":
            return f"powerlaw:{self.M[0]:g},{self.exponent:g}"
        if self.kind == "bernoulli-product":
            return "bernoulli:" + ",".join(f"{a:g}@{w:g}" for a, w in zip(self.atoms, self.weights))
        return f"push({self.scale:+g}x{self.offset:+g}):{self.base.label()}"


def uniform(M, d=1):
    return DisorderMeasure("uniform-box", d=d, M=(M,) * d if np.isscalar(M) else tuple(M))


def power_law(M, exponent, d=1):
    return DisorderMeasure("power-law-box", d=d, M=(M,) * d, exponent=exponent)


def bernoulli(atoms, weights, d=1):
    return DisorderMeasure("bernoulli-product", d=d, atoms=tuple(atoms), weights=tuple(weights))


def pushforward(base, scale=1.0, offset=0.0):
    return DisorderMeasure("pushforward-shift", d=1, base=base, scale=float(scale), offset=float(offset))


def sample_word(measure: DisorderMeasure, seed: int, n: int, stream: int = 0, start: int = 0):
    """Letters ``start, ..., start + n - 1`` of the i.i.d. word for ``(seed, stream)``.

    Letter ``i`` depends only on draws ``i*d .. i*d + d - 1`` of the stream, so
    extending ``n`` never changes earlier letters. Returns shape ``(n, d)``.
    """
    if n < 0:
        raise ParameterDomainError("n must be non-negative")
    d = measure.d
    u = Stream(seed, stream).uniforms(start * d, n * d).reshape(n, d)
    return measure._from_uniform(u)


# --- blocks ---------------------------------------------------------------


@dataclass(frozen=True)
class BadSet:
    """``U = {y : y_j >= thresholds_j for all j}``."""

    thresholds: tuple

    def contains(self, letters):
        letters = np.atleast_2d(np.asarray(letters, float))
        return np.all(letters >= np.asarray(self.thresholds), axis=-1)

    def probability(self, measure: DisorderMeasure):
        return math.prod(measure.coord_sf(t, j) for j, t in enumerate(self.thresholds))


@dataclass(frozen=True)
class BlockSpec:
    """Block length ``N``, good threshold ``b`` and bad set ``U`` with ``p1 = mu(U)``."""

    N: int
    b: float
    U: BadSet
    p1: float

    def __post_init__(self):
        if self.N < 1 or not self.b > 0:
            raise ParameterDomainError("BlockSpec needs N >= 1 and b > 0")
        if not 0 < self.p1 <= 1:
            raise ParameterDomainError("p1 = mu(U) must lie in (0, 1]")

    @classmethod
    def for_family(cls, N, b, U, measure, bounds):
        """Build and check ``d * Gamma_y * b <= gamma_E / 2`` against local bounds."""
        if measure.d * bounds.Gamma_y * b > bounds.gamma_E / 2 * (1 + 1e-12):
            raise ParameterDomainError(
                f"b={b} violates d*Gamma_y*b <= gamma_E/2 "
                f"({measure.d}*{bounds.Gamma_y:g}*{b:g} > {bounds.gamma_E / 2:g})"
            )
        return cls(N=N, b=b, U=U, p1=U.probability(measure))


def is_good_block(block, E, b):
    """Every letter lies in ``[0, bE]^d``."""
    if not E > 0:
        raise ParameterDomainError("E must be positive")
    block = np.asarray(block, float)
    if block.size == 0:
        return True
    return bool(np.all((block >= 0) & (block <= b * E)))


def is_bad_block(block, U: BadSet):
    """Some letter lies in ``U``."""
    block = np.asarray(block, float)
    if block.size == 0:
        return False
    return bool(np.any(U.contains(block)))


@dataclass(frozen=True)
class GoodBlockProbability:
    value: float
    lower_bound: float
    stderr: float = 0.0
    exact: bool = True


def good_block_probability(measure: DisorderMeasure, E, b, N, mc_samples=0, seed=0):
    """``P(block of length N is good)`` with the (M2) lower bound ``(C (bE)^l)^N``.

    The value is exact from the box CDF; ``mc_samples > 0`` instead returns a
    Monte Carlo estimate with its standard error (used as an independent check).
    """
    if N < 0:
        raise ParameterDomainError("N must be non-negative")
    bound = (measure.C * (b * E) ** measure.l) ** N
    if N == 0:
        return GoodBlockProbability(1.0, 1.0)
    if mc_samples <= 0:
        return GoodBlockProbability(measure.box_prob(b * E) ** N, bound)
    letters = sample_word(measure, seed, mc_samples * N).reshape(mc_samples, N, measure.d)
    good = np.all((letters >= 0) & (letters <= b * E), axis=(1, 2))
    p = float(good.mean())
    return GoodBlockProbability(p, bound, math.sqrt(max(p * (1 - p), 0.0) / mc_samples), exact=False)


def default_good_threshold(bounds, d, max_power=60):
    """Largest ``b = 2^-j`` with ``d * Gamma_y * b <= gamma_E / 2``."""
    for j in range(max_power + 1):
        b = 2.0**-j
        if d * bounds.Gamma_y * b <= bounds.gamma_E / 2:
            return b
    raise ParameterDomainError("no admissible good threshold b on the power-of-two grid")


@dataclass(frozen=True)
class BadSetChoice:
    U: BadSet
    y_hat: tuple
    eta: float
    radius: float
    p1: float


def default_bad_set(family, measure: DisorderMeasure, eta_max=0.01, halvings=40):
    """Constructive bad set around the top corner of ``supp(mu)``.

    ``y_hat`` is the upper corner of the support hull; it must satisfy
    ``G_{0,y_hat}(0) < 0``. ``eta`` is the largest ``eta_max * 2^-j`` with
    ``G_{0,y_hat}(eta) < -2 eta`` and the radius ``r`` the largest
    ``min(y_hat) * 2^-j`` with ``G_{0,y_hat - r}(eta) < -eta``.
    """
    _, hi = measure.support_box()
    y_hat = hi.astype(float)
    G = family.func
    if not G(0.0, y_hat, 0.0) < 0:
        raise ParameterDomainError("G_{0,y_hat}(0) >= 0 at the support corner; no bad letters")
    eta = next(
        (eta_max * 2.0**-j for j in range(halvings + 1) if G(0.0, y_hat, eta_max * 2.0**-j) < -2 * eta_max * 2.0**-j),
        None,
    )
    if eta is None:
        raise ParameterDomainError("no eta on the grid with G_{0,y_hat}(eta) < -2 eta")
    scale = float(np.min(y_hat))
    for j in range(1, halvings + 1):
        r = scale * 2.0**-j
        if G(0.0, y_hat - r, eta) < -eta:
            U = BadSet(tuple((y_hat - r).tolist()))
            return BadSetChoice(U, tuple(y_hat.tolist()), eta, r, U.probability(measure))
    raise ParameterDomainError("no neighbourhood radius found for the bad set")


def parse_measure(text):
    """Inverse of ``DisorderMeasure.label`` for the plain kinds.

    ``uniform:M[,M2,...]`` (one bound per coordinate), ``powerlaw:M,q`` and
    ``bernoulli:a1@w1,a2@w2,...``.
    """
    kind, _, rest = str(text).partition(":")
    try:
        if kind == "uniform":
            M = [float(v) for v in rest.split(",")]
            return uniform(M, d=len(M))
        if kind == "powerlaw":
            M, q = (float(v) for v in rest.split(","))
            return power_law(M, q)
        if kind == "bernoulli":
            pairs = [item.split("@") for item in rest.split(",")]
            return bernoulli([float(a) for a, _ in pairs], [float(w) for _, w in pairs])
    except ValueError:
        pass
    raise ParameterDomainError(f"bad measure spec {text!r}")
