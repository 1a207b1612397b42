"""The one-dimensional Anderson model through its projective transfer-matrix lift.

Conventions
-----------
Directions of the plane are parametrized by a lift ``x`` with one unit per
half-turn. The direction at ``x`` has standard angle ``alpha = -pi/4 - pi x``,
so ``x = 0`` is ``(1, -1)`` (chart point ``t = 0``, the parabolic direction of
``A_{0,0}``) and ``x_* = -3/4`` is ``[0:1]``. In this orientation the lift
increases with ``eps = E - E_-`` and decreases with ``u = V - a``; its rotation
number is the edge-normalized ``rho~(eps) = k(E_- + eps)``. The standard
projective rotation number of the cocycle is ``rho = 1 - rho~``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import disorder as dis
from . import kernels
from .dynamics import AssumptionReport, LiftFamily, register_family, verify_assumptions
from .errors import ChartSingularity, ParameterDomainError
from .parallel import ordered_map
from .rotation import estimate_rotation_number

X_STAR = -0.75
STURM_STREAM_BASE = 1 << 32  # keeps finite-volume draws apart from orbit streams
ROUTES = ("rotation", "sturm", "free")


# --- model ----------------------------------------------------------------


@dataclass(frozen=True)
class AndersonModel:
    """``V = a + x`` with ``x ~ base`` supported on ``[0, b - a]``."""

    base: dis.DisorderMeasure
    a: float = 0.0

    def __post_init__(self):
        if self.base.d != 1:
            raise ParameterDomainError("the Anderson potential is one-dimensional")
        lo, _ = self.base.support_box()
        if lo[0] != 0:
            raise ParameterDomainError("base measure must have 0 as its lower support endpoint")

    @classmethod
    def uniform(cls, a, b):
        if not b > a:
            raise ParameterDomainError("uniform potential needs a < b")
        return cls(dis.uniform(b - a), float(a))

    @classmethod
    def atom(cls, a=0.0):
        """Point mass at ``a``; violates (A1) and serves only as an oracle fixture."""
        return cls(dis.bernoulli((0.0,), (1.0,)), float(a))

    @classmethod
    def bernoulli(cls, a, b, p=0.5):
        if not b > a:
            raise ParameterDomainError("bernoulli potential needs a < b")
        return cls(dis.bernoulli((0.0, b - a), (1 - p, p)), float(a))

    @classmethod
    def parse(cls, text):
        """``uniform:a,b`` | ``bernoulli:a,b[,p]`` | ``atom:a``."""
        kind, _, rest = text.partition(":")
        try:
            vals = [float(v) for v in rest.split(",")] if rest else []
        except ValueError:
            raise ParameterDomainError(f"bad potential spec {text!r}") from None
        if kind == "uniform" and len(vals) == 2:
            return cls.uniform(*vals)
        if kind == "bernoulli" and len(vals) in (2, 3):
            return cls.bernoulli(*vals)
        if kind == "atom" and len(vals) <= 1:
            return cls.atom(*vals)
        raise ParameterDomainError(f"bad potential spec {text!r}")

    @property
    def width(self):
        return float(self.base.support_box()[1][0])

    @property
    def b(self):
        return self.a + self.width

    @property
    def E_minus(self):
        return self.a - 2.0

    @property
    def E_plus(self):
        return self.b + 2.0

    @property
    def spectrum(self):
        return (self.E_minus, self.E_plus)

    def check_a1(self):
        return self.base.check_m1()

    def edge_measure(self, side="lower"):
        """Law of ``u``: ``V - a`` at the lower edge, ``b - V`` at the upper edge."""
        if side == "lower":
            return self.base
        if side == "upper":
            return dis.pushforward(self.base, -1.0, self.width)
        raise ParameterDomainError("side must be 'lower' or 'upper'")

    def potential(self, seed, N, stream=0):
        return self.a + dis.sample_word(self.base, seed, N, stream=stream)[:, 0]

    def label(self):
        return f"anderson[a={self.a:g}]+{self.base.label()}"


# --- matrices and projective action -----------------------------------------


def transfer_matrix(E, v):
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def projective_chart_step(eps, u, t):
    """``F(t) = -1 + eps - u - 1/(t - 1)``; ``t = 1`` is the chart's point at infinity."""
    if t == 1:
        raise ChartSingularity("t = 1 is the direction [0:1]; use the angle form")
    return -1.0 + eps - u - 1.0 / (t - 1.0)


def lift_to_chart(x):
    """Chart coordinate ``t = xi/eta + 1`` of the direction at lift ``x``."""
    alpha = -math.pi / 4 - math.pi * x
    s = math.sin(alpha)
    if abs(s) < 1e-15:
        raise ChartSingularity("direction [1:0] has t = infinity")
    return math.cos(alpha) / s + 1.0


def chart_to_angle(t):
    """Angle in ``[0, 1)`` (lift mod 1) of the direction ``(t - 1, 1)``."""
    alpha = math.atan2(1.0, t - 1.0)
    return (-0.25 - alpha / math.pi) % 1.0


@dataclass(frozen=True)
class ProjectivePoint:
    lift: float

    @property
    def angle(self):
        return self.lift % 1.0

    @property
    def direction(self):
        alpha = -math.pi / 4 - math.pi * self.lift
        return np.array([math.cos(alpha), math.sin(alpha)])

    @property
    def t(self):
        return lift_to_chart(self.lift)


def projective_lift_step(matrix, x):
    """Lift of the projective action of ``matrix`` (positive determinant).

    The image of ``x_*`` is taken with displacement in ``(-1/4, 3/4]``; other
    points follow by the clockwise sweep from the image of ``[0:1]``, which
    makes the step continuous and monotone in ``x``.
    """
    M = np.asarray(matrix, float)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if M.shape != (2, 2) or not det > 0:
        raise ParameterDomainError("matrix must be 2x2 with positive determinant")
    s = x - X_STAR
    n = math.floor(s)
    f = s - n
    v = (math.sin(math.pi * f), math.cos(math.pi * f))
    w0x, w0y = M[0, 1], M[1, 1]
    wx = M[0, 0] * v[0] + M[0, 1] * v[1]
    wy = M[1, 0] * v[0] + M[1, 1] * v[1]
    p0 = 0.5 - math.atan2(w0y, w0x) / math.pi
    while p0 > 0.75:
        p0 -= 1.0
    while p0 <= -0.25:
        p0 += 1.0
    cross = w0x * wy - w0y * wx
    sweep = math.atan2(max(-cross, 0.0), w0x * wx + w0y * wy) / math.pi
    return X_STAR + n + p0 + sweep


def edge_transfer_matrix(eps, u):
    return np.array([[-2.0 + eps - u, -1.0], [1.0, 0.0]])


@register_family("anderson")
def anderson_family(u_max=1.0, e_range=(-20.0, 20.0)):
    """``G_{eps,u}``: the lift of ``[[-2 + eps - u, -1], [1, 0]]`` (k = 1, d = 1)."""
    u_max = float(u_max)
    if u_max < 0:
        raise ParameterDomainError("u_max must be non-negative")

    def func(E, y, x):
        x = np.asarray(x, float)
        lam = -2.0 + np.asarray(E, float) - np.asarray(y, float)[..., 0]
        s = x - X_STAR
        n = np.floor(s)
        a = np.pi * (s - n)
        sn, cs = np.sin(a), np.cos(a)
        return X_STAR + 0.5 + n + (1.0 - np.arctan2(sn, lam * sn - cs) / np.pi)

    def kernel(x0, E, ys, trace=None):
        return kernels.anderson_orbit(x0, E, ys, trace)

    return LiftFamily(
        name="anderson", k=1, d=1, e_range=tuple(e_range), y_box=((0.0,), (u_max,)),
        func=func, x_star=X_STAR, kernel=kernel, params={"u_max": u_max},
    )


def model_family(model: AndersonModel):
    return anderson_family(u_max=model.width, e_range=(-(model.width + 20.0), model.width + 20.0))


# --- IDS routes -------------------------------------------------------------


def free_ids(E):
    """``(1/pi) arccos(-E/2)`` clipped to the spectrum ``[-2, 2]``."""
    return math.acos(min(1.0, max(-1.0, -E / 2))) / math.pi


@dataclass
class IdsPoint:
    E: float
    value: float
    stderr: float
    route: str
    budget: int
    realizations: int
    seed: int
    extra: dict = field(default_factory=dict)

    def csv_row(self, key="E"):
        return {key: self.E, "route": self.route, "value": self.value, "stderr": self.stderr,
                "n_or_N": self.budget, "realizations": self.realizations, "seed": self.seed}


def ids_rotation(model: AndersonModel, E, n=10**6, replicates=8, x0=0.0, seed=0, threads=None) -> IdsPoint:
    """``k(E) = 1 - rho(E)`` from the lift orbit at ``eps = E - E_-``."""
    est = estimate_rotation_number(model_family(model), E - model.E_minus, model.base, n, replicates, x0, seed,
                                   threads=threads)
    rho = 1.0 - est.rho_hat  # standard projective orientation
    return IdsPoint(float(E), 1.0 - rho, est.stderr, "rotation", int(n), int(replicates), int(seed),
                    {"rho": rho, "windings": est.windings})


def _sturm_counts(model, Es, N, realizations, seed, threads=None):
    Es = [float(E) for E in Es]

    def run(r):
        V = np.ascontiguousarray(model.potential(seed, N, stream=STURM_STREAM_BASE + r))
        return [kernels.sturm_count(V, E) for E in Es]

    return np.asarray(ordered_map(run, range(int(realizations)), threads), float)


def ids_sturm(model: AndersonModel, E, N=10**4, realizations=20, seed=0, threads=None) -> IdsPoint:
    """Fraction of Dirichlet eigenvalues below ``E`` by the Sturm pivot count."""
    return ids_curve(model, [E], "sturm", N=N, realizations=realizations, seed=seed, threads=threads).points[0]


@dataclass
class IdsCurve:
    route: str
    points: list
    meta: dict = field(default_factory=dict)

    @property
    def E(self):
        return [p.E for p in self.points]

    @property
    def values(self):
        return [p.value for p in self.points]

    def is_monotone(self, n_se=2.0):
        for p, q in zip(self.points, self.points[1:]):
            if q.value < p.value - n_se * math.hypot(_finite(p.stderr), _finite(q.stderr)):
                return False
        return True


def _finite(x):
    return x if math.isfinite(x) else 0.0


def ids_curve(model, Es, route="sturm", *, N=10**4, realizations=20, n=10**6, replicates=8, seed=0,
              threads=None) -> IdsCurve:
    """IDS on a grid. The sturm route reuses each potential across energies, so it is monotone pathwise."""
    Es = [float(E) for E in Es]
    if route == "sturm":
        if N < 2 or realizations < 1:
            raise ParameterDomainError("need N >= 2 and realizations >= 1")
        counts = _sturm_counts(model, Es, N, realizations, seed, threads) / N
        se = counts.std(axis=0, ddof=1) / math.sqrt(realizations) if realizations > 1 else np.full(len(Es), math.nan)
        pts = [IdsPoint(E, float(counts[:, i].mean()), float(se[i]), "sturm", int(N), int(realizations), int(seed))
               for i, E in enumerate(Es)]
        meta = {"N": int(N), "realizations": int(realizations), "seed": int(seed)}
    elif route == "rotation":
        pts = [ids_rotation(model, E, n, replicates, seed=seed, threads=threads) for E in Es]
        meta = {"n": int(n), "replicates": int(replicates), "seed": int(seed)}
    elif route == "free":
        pts = [IdsPoint(E, free_ids(E - model.a), 0.0, "free", 0, 0, int(seed)) for E in Es]
        meta = {}
    else:
        raise ParameterDomainError(f"route must be one of {ROUTES}")
    return IdsCurve(route, pts, meta)


# --- edge scans -------------------------------------------------------------


@dataclass
class EdgePoint:
    eps: float
    value: float
    stderr: float
    resolved: bool
    ratio: float
    ratio_stderr: float

    def csv_row(self, route, budget, realizations, seed):
        return {"eps": self.eps, "route": route, "value": self.value, "stderr": self.stderr,
                "n_or_N": budget, "realizations": realizations, "seed": seed}


@dataclass
class EdgeScan:
    side: str
    route: str
    points: list
    fit: object
    meta: dict = field(default_factory=dict)

    def ratios_decreasing(self):
        """Ratios decrease (within one combined standard error) as ``eps`` decreases."""
        pts = sorted((p for p in self.points if p.resolved), key=lambda p: -p.eps)
        return all(q.ratio <= p.ratio + math.hypot(p.ratio_stderr, q.ratio_stderr)
                   for p, q in zip(pts, pts[1:]))


def _edge_point(eps, value, stderr):
    if eps == 0:
        return EdgePoint(0.0, 0.0, 0.0, False, math.nan, math.nan)
    resolved = 0 < value < 1
    ratio = ratio_se = math.nan
    if resolved and 0 < eps < 1:
        ratio = math.log(-math.log(value)) / math.log(eps)
        ratio_se = abs(_finite(stderr) / (math.log(eps) * value * math.log(value)))
    return EdgePoint(float(eps), float(value), float(stderr), resolved, ratio, ratio_se)


def edge_scan(model: AndersonModel, eps_grid, side="lower", route="sturm", *, N=10**4, realizations=50,
              n=10**6, replicates=8, seed=0, threads=None) -> EdgeScan:
    """``rho~(eps) = k(E_- + eps)`` (lower) or ``1 - k(E_+ - eps)`` (upper) on a grid.

    Zero values are flagged unresolved and left out of the exponent fit.
    """
    from .fitting import fit_lifshitz_exponent
    from .errors import InsufficientData

    eps_grid = [float(e) for e in eps_grid]
    if any(e < 0 for e in eps_grid):
        raise ParameterDomainError("eps must be non-negative")
    live = [e for e in eps_grid if e > 0]
    if route == "rotation":
        est = {e: estimate_rotation_number(model_family(model), e, model.edge_measure(side), n, replicates,
                                           seed=seed, threads=threads) for e in live}
        vals = {e: (est[e].rho_hat, est[e].stderr) for e in live}
        budget, reps = n, replicates
    elif route == "sturm":
        Es = [model.E_minus + e if side == "lower" else model.E_plus - e for e in live]
        if side not in ("lower", "upper"):
            raise ParameterDomainError("side must be 'lower' or 'upper'")
        curve = ids_curve(model, Es, "sturm", N=N, realizations=realizations, seed=seed, threads=threads)
        vals = {e: (p.value if side == "lower" else 1.0 - p.value, p.stderr) for e, p in zip(live, curve.points)}
        budget, reps = N, realizations
    else:
        raise ParameterDomainError("edge scans use the 'rotation' or 'sturm' route")
    points = [_edge_point(e, *vals[e]) if e > 0 else _edge_point(0.0, 0.0, 0.0) for e in eps_grid]
    try:
        fit = fit_lifshitz_exponent([(p.eps, p.value) for p in points if p.eps > 0])
    except InsufficientData:
        fit = None
    return EdgeScan(side, route, points, fit, {"budget": int(budget), "realizations": int(reps), "seed": int(seed)})


# --- hypotheses -------------------------------------------------------------


def verify_anderson_hypotheses(model: AndersonModel, r=0.1, side="lower", delta0=0.005, **kwargs) -> AssumptionReport:
    """Check the induced family on ``eps in [-r, r]``, ``u in supp(nu)``; requires ``k_hat = 1``.

    The tangency window ``delta0`` is small because ``G_{0,0}(x) - x`` carries a
    large cubic term (``t^2 / (1 - t)`` in the chart).
    """
    if not 0 < r < 0.5:
        raise ParameterDomainError("r must lie in (0, 1/2)")
    fam = model_family(model)
    nu = model.edge_measure(side)
    report = verify_assumptions(fam, nu, e_box=(-r, r), y_box=((0.0,), (model.width,)), delta0=delta0, **kwargs)
    if report.k_hat != 1:
        report.g2 = False
        report.witnesses.setdefault("G2", {"k_hat": report.k_hat, "expected": 1})
    g = float(fam.func(0.0, np.array([model.width]), X_STAR))
    report.witnesses["x_star"] = {"direction": "[0:1]", "x_star": X_STAR, "G_worst": g}
    return report
