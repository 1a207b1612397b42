"""Lifted circle-map families, orbit iteration and numerical hypothesis checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import (
    AssumptionViolation,
    InconclusiveOrderError,
    NumericOverflowError,
    ParameterDomainError,
)


@dataclass(frozen=True)
class LiftFamily:
    """A parametrized family of lifts ``G_{E,y}`` of circle diffeomorphisms.

    ``func(E, y, x)`` must broadcast: ``E`` and ``x`` array-like, ``y`` with a
    trailing axis of length ``d``. ``kernel`` is an optional compiled orbit loop
    ``kernel(x0, E, letters_1d, trace) -> (x, lo, hi)`` for ``d == 1`` families.
    """

    name: str
    k: int
    d: int
    e_range: tuple
    y_box: tuple  # (lower corner, upper corner)
    func: Callable
    x_star: float
    kernel: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ParameterDomainError("k and d must be positive integers")
        if not -1 < self.x_star < 0:
            raise ParameterDomainError("x_star must lie in (-1, 0)")
        lo, hi = (np.broadcast_to(np.asarray(c, float), (self.d,)) for c in self.y_box)
        object.__setattr__(self, "y_box", (tuple(lo.tolist()), tuple(hi.tolist())))

    def in_box(self, E, y=None):
        e_lo, e_hi = self.e_range
        if not e_lo <= E <= e_hi:
            return False
        if y is None:
            return True
        y = np.asarray(y, float)
        lo, hi = np.asarray(self.y_box[0]), np.asarray(self.y_box[1])
        return bool(np.all((y >= lo) & (y <= hi)))

    def describe(self):
        return {"name": self.name, "k": self.k, "d": self.d, **self.params}


# --- catalog --------------------------------------------------------------

FAMILIES: dict[str, Callable[..., LiftFamily]] = {}


def register_family(name):
    def deco(factory):
        FAMILIES[name] = factory
        return factory

    return deco


def get_family(name, **params) -> LiftFamily:
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ParameterDomainError(f"unknown family {name!r}; known: {sorted(FAMILIES)}") from None
    return factory(**params)


@register_family("model")
def model_map(amplitude=0.2, e_range=(-0.5, 0.5), y_max=0.5):
    """``G_{E,y}(x) = x + amplitude * sin^2(pi x) + E - y`` (k = 1, d = 1).

    ``|amplitude| < 1/pi`` keeps ``x -> G(x)`` strictly increasing. A negative
    amplitude is permitted as a (G2)-violating fixture.
    """
    amplitude = float(amplitude)
    if not 0 < abs(amplitude) < 1 / math.pi:
        raise ParameterDomainError("model amplitude must satisfy 0 < |a| < 1/pi")

    def func(E, y, x):
        y = np.asarray(y, float)
        s = np.sin(np.pi * np.asarray(x, float))
        return x + amplitude * s * s + E - y[..., 0]

    def kernel(x0, E, ys, trace=None):
        return kernels.model_orbit(x0, E, amplitude, ys, trace)

    return LiftFamily(
        name="model", k=1, d=1, e_range=tuple(e_range), y_box=((0.0,), (float(y_max),)),
        func=func, x_star=-0.5, kernel=kernel, params={"amplitude": amplitude},
    )


@register_family("rigid-translation")
def rigid_translation(e_range=(-1.0, 1.0), y_max=1.0):
    """``G_{E,y}(x) = x + E - y_1``; no parabolic point (a (G2) counterexample)."""

    def func(E, y, x):
        return np.asarray(x, float) + E - np.asarray(y, float)[..., 0]

    return LiftFamily(
        name="rigid-translation", k=1, d=1, e_range=tuple(e_range), y_box=((0.0,), (float(y_max),)),
        func=func, x_star=-0.5,
    )


@register_family("rigid-rotation")
def rigid_rotation(alpha=0.3, e_range=(-1.0, 1.0), y_max=1.0):
    """``G(x) = x + alpha``, ignoring both parameters."""
    alpha = float(alpha)

    def func(E, y, x):
        x = np.asarray(x, float)
        return x + alpha + 0.0 * (np.asarray(E, float) + np.asarray(y, float)[..., 0])

    return LiftFamily(
        name="rigid-rotation", k=1, d=1, e_range=tuple(e_range), y_box=((0.0,), (float(y_max),)),
        func=func, x_star=-0.5, params={"alpha": alpha},
    )


# --- evaluation -----------------------------------------------------------


def eval_lift(family: LiftFamily, E, y, x):
    """``G_{E,y}(x)`` with a domain check on ``(E, y)``."""
    y = np.atleast_1d(np.asarray(y, float))
    if y.shape != (family.d,):
        raise ParameterDomainError(f"y must have shape ({family.d},)")
    if not family.in_box(E, y):
        raise ParameterDomainError(f"(E={E}, y={y.tolist()}) outside the box of {family.name!r}")
    return float(family.func(float(E), y, float(x)))


def _as_word(family, word):
    w = np.asarray(word, float)
    if w.size == 0:
        return w.reshape(0, family.d)
    if w.ndim == 1:
        w = w.reshape(-1, family.d) if family.d > 1 else w[:, None]
    if w.shape[1] != family.d:
        raise ParameterDomainError(f"letters must have dimension {family.d}")
    return w


def orbit_chunk(family: LiftFamily, E, letters, x0, trace=None):
    """Unchecked inner iteration; returns ``(x_final, x_min, x_max)``."""
    if family.kernel is not None and family.d == 1:
        col = np.ascontiguousarray(letters[:, 0])
        return family.kernel(float(x0), float(E), col, trace)
    x = float(x0)
    lo = hi = x
    func = family.func
    for i, y in enumerate(letters):
        x = float(func(E, y, x))
        lo, hi = min(lo, x), max(hi, x)
        if trace is not None:
            trace[i] = x
    return x, lo, hi


def iterate_orbit(family: LiftFamily, E, word, x0, trace=False):
    """Apply ``G_{E,w_N} o ... o G_{E,w_1}`` to ``x0``.

    With ``trace=True`` returns ``(final, trajectory)`` where ``trajectory``
    holds ``x0`` followed by every image.
    """
    w = _as_word(family, word)
    if not family.in_box(E):
        raise ParameterDomainError(f"E={E} outside the box of {family.name!r}")
    if len(w):
        lo, hi = np.asarray(family.y_box[0]), np.asarray(family.y_box[1])
        if np.any(w < lo) or np.any(w > hi):
            raise ParameterDomainError("word has letters outside the y-box")
    out = np.empty(len(w)) if trace else None
    x, xmin, xmax = orbit_chunk(family, E, w, x0, out)
    if not (math.isfinite(x) and math.isfinite(xmin) and math.isfinite(xmax)):
        raise NumericOverflowError(f"non-finite orbit value for family {family.name!r}")
    if trace:
        return x, np.concatenate(([float(x0)], out))
    return x


# --- hypothesis checks ----------------------------------------------------


@dataclass
class AssumptionReport:
    family: str
    g1: bool
    g2: bool
    g3: bool
    g4: bool
    m3: bool
    m1: bool | None = None
    m2: bool | None = None
    k_hat: int | None = None
    c1: float | None = None
    c2: float | None = None
    delta0: float | None = None
    fit_slope: float | None = None
    fit_residual: float | None = None
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self):
        flags = [self.g1, self.g2, self.g3, self.g4, self.m3, self.m1, self.m2]
        return all(f for f in flags if f is not None)

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def to_text(self):
        lines = []
        for key, value in self.to_dict().items():
            if key == "witnesses":
                for name, wit in sorted(value.items()):
                    lines.append(f"witness.{name}: {json.dumps(wit, default=_json_default)}")
            else:
                lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def _box_grid(lo, hi, per_axis):
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))


@dataclass(frozen=True)
class TangencyFit:
    ok: bool
    k_hat: int | None
    slope: float | None
    residual: float | None
    c1: float | None
    c2: float | None
    witness: dict | None


def fit_tangency(family, delta0=0.1, x_min=1e-4, points=41, residual_tol=0.05, slack=1e-3):
    """Estimate the order ``2k`` of ``G_{0,0}(x) - x`` near 0 by a log-log fit.

    Raises ``InconclusiveOrderError`` when the maximum residual of the fit
    exceeds ``residual_tol``. ``c1``/``c2`` are the extreme sampled ratios
    ``(G(x) - x) / x^(2k)`` widened by the relative ``slack``.
    """
    zero = np.zeros(family.d)
    g00 = float(family.func(0.0, zero, 0.0))
    if abs(g00) > 1e-12:
        return TangencyFit(False, None, None, None, None, None, {"normalization": g00})
    mags = np.geomspace(x_min, delta0, points)
    xs = np.concatenate((-mags[::-1], mags))
    r = np.asarray(family.func(0.0, zero, xs), float) - xs
    bad = np.flatnonzero(~(r > 0))
    if bad.size:
        i = int(bad[0])
        return TangencyFit(False, None, None, None, None, None, {"x": float(xs[i]), "G_minus_x": float(r[i])})
    lx, lr = np.log(np.abs(xs)), np.log(r)
    slope, intercept = np.polyfit(lx, lr, 1)
    residual = float(np.max(np.abs(lr - (slope * lx + intercept))))
    if residual > residual_tol:
        raise InconclusiveOrderError(
            f"log-log fit residual {residual:.3g} exceeds {residual_tol} (slope {slope:.3f})"
        )
    k_hat = int(round(slope / 2))
    if k_hat < 1:
        return TangencyFit(False, None, float(slope), residual, None, None, {"slope": float(slope)})
    ratio = r / xs ** (2 * k_hat)
    return TangencyFit(
        True, k_hat, float(slope), residual,
        float(ratio.min() * (1 - slack)), float(ratio.max() * (1 + slack)), None,
    )


def _partials(func, E, y, x, h):
    """Central differences of ``func`` in E and in each y_j on broadcast grids."""
    dE = (func(E + h, y, x) - func(E - h, y, x)) / (2 * h)
    dys = []
    for j in range(y.shape[-1]):
        step = np.zeros(y.shape[-1])
        step[j] = h
        dys.append((func(E, y + step, x) - func(E, y - step, x)) / (2 * h))
    return np.asarray(dE, float), [np.asarray(d, float) for d in dys]


def verify_assumptions(
    family: LiftFamily,
    measure=None,
    *,
    e_box=None,
    y_box=None,
    grid=9,
    x_grid=64,
    h=1e-6,
    tol=1e-8,
    delta0=0.1,
    fit_points=41,
    residual_tol=0.05,
):
    """Check (G1)-(G4), (M3) and, with a measure, (M1)-(M2) on sample grids.

    ``e_box``/``y_box`` restrict the parameter region (default: the family's
    box with ``y >= 0``). (M3) is checked over the measure's support when one
    is given, otherwise over the y-box.
    """
    e_lo, e_hi = e_box if e_box is not None else family.e_range
    y_lo, y_hi = y_box if y_box is not None else family.y_box
    y_lo = np.maximum(np.broadcast_to(np.asarray(y_lo, float), (family.d,)), 0.0)
    y_hi = np.broadcast_to(np.asarray(y_hi, float), (family.d,))
    func = family.func
    witnesses = {}

    Es = np.linspace(e_lo, e_hi, grid)
    Ys = _box_grid(y_lo, y_hi, max(2, grid // 2 + 1))
    xs = family.x_star + np.arange(x_grid) / x_grid
    Eg, Yi, Xg = np.meshgrid(Es, np.arange(len(Ys)), xs, indexing="ij")
    Yg = Ys[Yi]

    # (G1): finite values, lift equivariance, strictly increasing in x
    G = np.asarray(func(Eg, Yg, Xg), float)
    G1 = np.asarray(func(Eg, Yg, Xg + 1.0), float)
    dx = (np.asarray(func(Eg, Yg, Xg + h), float) - np.asarray(func(Eg, Yg, Xg - h), float)) / (2 * h)
    equi = np.abs(G1 - G - 1.0)
    g1 = bool(np.all(np.isfinite(G)) and np.all(equi < 1e-10) and np.all(dx > 0))
    if not g1:
        score = np.where(np.isfinite(G) & np.isfinite(equi), equi, np.inf) + np.maximum(-dx, 0)
        i = np.unravel_index(np.argmax(score), G.shape)
        witnesses["G1"] = {"E": float(Eg[i]), "y": Yg[i].tolist(), "x": float(Xg[i]),
                           "equivariance_error": float(equi[i]), "dG_dx": float(dx[i])}

    # (G2)
    fit = fit_tangency(family, delta0=delta0, points=fit_points, residual_tol=residual_tol)
    g2 = fit.ok and fit.k_hat == family.k
    if not g2:
        witnesses["G2"] = fit.witness or {"k_hat": fit.k_hat, "declared_k": family.k}

    # (G3), (G4)
    dE, dys = _partials(func, Eg, Yg, Xg, h)
    zero = np.zeros(family.d)
    dE0, dy0 = _partials(func, 0.0, zero, 0.0, h)
    g3 = bool(np.all(dE >= -tol) and float(dE0) > tol)
    if not g3:
        i = np.unravel_index(np.argmin(dE), dE.shape)
        witnesses["G3"] = {"E": float(Eg[i]), "y": Yg[i].tolist(), "x": float(Xg[i]),
                           "dG_dE": float(dE[i]), "dG_dE_origin": float(dE0)}
    g4_ok = [bool(np.all(d <= tol)) and float(d0) < -tol for d, d0 in zip(dys, dy0)]
    g4 = all(g4_ok)
    if not g4:
        j = g4_ok.index(False)
        i = np.unravel_index(np.argmax(dys[j]), dys[j].shape)
        witnesses["G4"] = {"j": j, "E": float(Eg[i]), "y": Yg[i].tolist(), "x": float(Xg[i]),
                           "dG_dy": float(dys[j][i]), "dG_dy_origin": float(dy0[j])}

    # (M1)-(M3)
    m1 = m2 = None
    if measure is not None:
        m1 = measure.check_m1()
        m2 = measure.check_m2()
        if not m1:
            witnesses["M1"] = {"support": [a.tolist() for a in measure.support_box()]}
        if not m2:
            witnesses["M2"] = {"C": measure.C, "l": measure.l}
        ys = measure.support_points()
    else:
        ys = _box_grid(y_lo, y_hi, max(2, grid))
    gx = np.asarray(func(0.0, ys, family.x_star), float)
    m3 = bool(np.all(gx > family.x_star))
    if not m3:
        i = int(np.argmin(gx - family.x_star))
        witnesses["M3"] = {"y": ys[i].tolist(), "x_star": family.x_star, "G": float(gx[i])}

    return AssumptionReport(
        family=family.name, g1=g1, g2=g2, g3=g3, g4=g4, m3=m3, m1=m1, m2=m2,
        k_hat=fit.k_hat, c1=fit.c1, c2=fit.c2, delta0=delta0,
        fit_slope=fit.slope, fit_residual=fit.residual, witnesses=witnesses,
    )


@dataclass(frozen=True)
class LocalBounds:
    delta: float
    c1: float
    c2: float
    gamma_E: float
    Gamma_E: float
    gamma_y: float
    Gamma_y: float

    def to_dict(self):
        return asdict(self)


def local_bounds(family: LiftFamily, delta, *, grid=9, x_points=81, h=1e-6, slack=1e-3):
    """Sampled constants of the two-sided bound near the parabolic point.

    Over ``x in [-delta, delta]``, ``E in [0, delta]``, ``y in [0, delta]^d``:
    ``c1, c2`` bracket ``(G_{0,0}(x) - x) / x^(2k)`` (widened by ``slack``);
    ``gamma_E <= dG/dE <= Gamma_E`` and ``gamma_y <= -dG/dy_j <= Gamma_y``.
    """
    if not delta > 0:
        raise ParameterDomainError("delta must be positive")
    e_lo, e_hi = family.e_range
    y_hi = np.asarray(family.y_box[1])
    if e_lo > 0 or e_hi < delta or np.any(np.asarray(family.y_box[0]) > 0) or np.any(y_hi < delta):
        raise ParameterDomainError(f"[0, {delta}] x [0, {delta}]^d is not inside the family box")
    func = family.func
    xs = np.linspace(-delta, delta, x_points)
    xs_nz = xs[xs != 0]
    zero = np.zeros(family.d)
    r = np.asarray(func(0.0, zero, xs_nz), float) - xs_nz
    ratio = r / xs_nz ** (2 * family.k)
    if np.any(ratio <= 0):
        i = int(np.argmin(ratio))
        raise AssumptionViolation("G_{0,0}(x) - x is not positive near 0", {"x": float(xs_nz[i]), "ratio": float(ratio[i])})
    Es = np.linspace(0.0, delta, grid)
    Ys = _box_grid(np.zeros(family.d), np.full(family.d, delta), max(2, grid // 2 + 1))
    Eg, Yi, Xg = np.meshgrid(Es, np.arange(len(Ys)), xs, indexing="ij")
    Yg = Ys[Yi]
    dE, dys = _partials(func, Eg, Yg, Xg, h)
    ndy = np.stack([-d for d in dys])
    for name, arr, grid_arr in (("dG/dE", dE, dE), ("-dG/dy", ndy.min(axis=0), ndy.min(axis=0))):
        if np.any(arr <= 0):
            i = np.unravel_index(np.argmin(grid_arr), grid_arr.shape)
            raise AssumptionViolation(
                f"{name} is not positive on the local box",
                {"E": float(Eg[i]), "y": Yg[i].tolist(), "x": float(Xg[i]), "value": float(grid_arr[i])},
            )
    return LocalBounds(
        delta=float(delta),
        c1=float(ratio.min() * (1 - slack)),
        c2=float(ratio.max() * (1 + slack)),
        gamma_E=float(dE.min()),
        Gamma_E=float(dE.max()),
        gamma_y=float(ndy.min()),
        Gamma_y=float(ndy.max()),
    )
