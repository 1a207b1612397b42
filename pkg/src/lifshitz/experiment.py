"""JSON-configured experiments with CSV data, a JSON summary and plot files.

A config is a single JSON object. Unknown keys are errors at every level.
CSV output depends only on ``(config, seed)``; wall time and backend go to
the summary alone.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import anderson as an
from . import bottleneck as bn
from . import rotation as rot
from .disorder import DisorderMeasure, parse_measure
from .dynamics import get_family, verify_assumptions
from .errors import BudgetExhausted, ConfigError
from .kernels import BACKEND
from .parallel import thread_count

KINDS = ("bottleneck-sweep", "anderson-ids", "anderson-edge", "rotation", "plateau", "bracket", "verify")
TOP_KEYS = {"kind", "seed", "grid", "budgets", "family", "measure", "model", "params", "constants", "output"}
BUDGET_KEYS = {"n", "replicates", "N", "realizations", "cap", "trials", "length"}
CONSTANT_KEYS = {"A", "a", "b", "delta"}
OUTPUT_KEYS = {"dir", "prefix", "gnuplot"}
PARAM_KEYS = {
    "bottleneck-sweep": {"k", "lambda", "start", "target"},
    "anderson-ids": {"route"},
    "anderson-edge": {"route", "side"},
    "rotation": {"x0"},
    "plateau": {"x0"},
    "bracket": {"k"},
    "verify": {"r", "side"},
}
DEFAULT_BUDGETS = {
    "n": 10**6, "replicates": 8, "N": 10**4, "realizations": 20, "cap": 10**9, "trials": 10**3, "length": 10**3,
}

BOTTLENECK_COLUMNS = ("epsilon", "k", "lambda", "steps", "M1", "M2", "M3", "N1", "N2")
ANDERSON_COLUMNS = ("route", "value", "stderr", "n_or_N", "realizations", "seed")
BRACKET_COLUMNS = ("E", "N", "N_prime", "ln_lower", "ln_upper")
SLOPE_TOL = {1: 0.02, 2: 0.03}


def _keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _posint(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value) or value < 1:
        raise ConfigError(f"budget {name!r} must be a positive integer")
    return int(value)


@dataclass
class ExperimentConfig:
    kind: str
    grid: list
    seed: int = 0
    budgets: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)
    measure: object = None
    model: str | None = None
    params: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc):
        _keys(doc, TOP_KEYS, "config")
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
        grid = doc.get("grid", [])
        if kind != "verify":
            if not isinstance(grid, list) or not grid:
                raise ConfigError("grid must be a non-empty list")
            if not all(isinstance(g, (int, float)) and not isinstance(g, bool) and math.isfinite(g) for g in grid):
                raise ConfigError("grid entries must be finite numbers")
            diffs = np.diff(grid)
            if len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ConfigError("grid must be strictly sorted")
        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        budgets = doc.get("budgets", {})
        _keys(budgets, BUDGET_KEYS, "budgets")
        budgets = {**DEFAULT_BUDGETS, **{k: _posint(v, k) for k, v in budgets.items()}}
        params = doc.get("params", {})
        _keys(params, PARAM_KEYS[kind], "params")
        constants = doc.get("constants", {})
        _keys(constants, CONSTANT_KEYS, "constants")
        output = doc.get("output", {})
        _keys(output, OUTPUT_KEYS, "output")
        family = doc.get("family", {})
        _keys(family, {"name", "params"}, "family")
        if kind in ("rotation", "plateau", "verify") and "model" not in doc and "name" not in family:
            raise ConfigError(f"{kind} needs a family name")
        if kind.startswith("anderson") and "model" not in doc:
            raise ConfigError(f"{kind} needs a model spec such as 'uniform:0,1'")
        return cls(kind=kind, grid=[float(g) for g in grid], seed=seed, budgets=budgets, family=family,
                   measure=doc.get("measure"), model=doc.get("model"), params=params, constants=constants,
                   output=output, raw=doc)

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(doc)

    @property
    def config_hash(self):
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def build_family(self):
        try:
            return get_family(self.family["name"], **self.family.get("params", {}))
        except TypeError as exc:
            raise ConfigError(f"bad family parameters: {exc}") from None

    def build_measure(self):
        if self.measure is None:
            raise ConfigError("a measure is required")
        if isinstance(self.measure, str):
            return parse_measure(self.measure)
        try:
            return DisorderMeasure.from_dict(self.measure)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad measure: {exc}") from None


@dataclass
class Report:
    csv_text: str
    summary: dict
    plot_data: str
    gnuplot: str | None = None
    exit_code: int = 0
    paths: dict = field(default_factory=dict)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _plot(rows, x, y, err=None):
    lines = [f"# {x} {y}" + (f" {err}" if err else "")]
    for r in rows:
        vals = [r[x], r[y]] + ([r[err]] if err else [])
        lines.append(" ".join(_fmt(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def gnuplot_script(data_file, xlabel, ylabel, logscale=""):
    out = [f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if logscale:
        out.append(f"set logscale {logscale}")
    out.append(f"plot '{data_file}' using 1:2 with linespoints title '{ylabel}'")
    return "\n".join(out) + "\n"


# --- pipelines ----------------------------------------------------------------


def _run_bottleneck(cfg):
    p = cfg.params
    if "k" not in p or "lambda" not in p:
        raise ConfigError("bottleneck-sweep needs params k and lambda")
    k, lam = int(p["k"]), float(p["lambda"])
    delta = float(cfg.constants.get("delta", 0.1))
    grid = sorted(cfg.grid, reverse=True)
    start, target = p.get("start", -delta), p.get("target", delta)
    reports, capped = [], []
    for eps in grid:
        bmap = bn.BottleneckMap(k, lam, eps, delta)
        try:
            reports.append(bn.measure_passage(bmap, start, target, cap=cfg.budgets["cap"]))
        except BudgetExhausted as exc:
            reports.append(exc.partial)
            capped.append(eps)
    rows = [{"epsilon": r.eps, "k": r.k, "lambda": r.coef, "steps": r.steps_total, "M1": r.M1, "M2": r.M2,
             "M3": r.M3, "N1": r.N1, "N2": r.N2} for r in reports]
    results = {"capped": capped, "in_regime": [r.in_regime for r in reports]}
    criteria = {"bracketing": all(r.M2 >= r.N2 and (r.N1 is None or r.steps_total <= r.N1) for r in reports)}
    ok = [r for r in reports if r.eps not in capped]
    if len(ok) >= 2:
        slope, intercept, resid = bn.loglog_slope([r.eps for r in ok], [r.steps_total for r in ok])
        target_slope = -bn.scaling_exponent(k)
        results.update(slope=slope, intercept=intercept, residual=resid, target_slope=target_slope)
        criteria["slope"] = abs(slope - target_slope) <= SLOPE_TOL.get(k, 0.03)
    plot = _plot(rows, "epsilon", "steps")
    return BOTTLENECK_COLUMNS, rows, results, criteria, plot, ("epsilon", "steps", "xy"), 3 if capped else 0


def _run_anderson_ids(cfg):
    model = an.AndersonModel.parse(cfg.model)
    route = cfg.params.get("route", "both")
    routes = ("rotation", "sturm") if route == "both" else (route,)
    if any(r_ not in an.ROUTES for r_ in routes):
        raise ConfigError(f"route must be one of {an.ROUTES + ('both',)}")
    b = cfg.budgets
    curves = {r_: an.ids_curve(model, cfg.grid, r_, N=b["N"], realizations=b["realizations"], n=b["n"],
                               replicates=b["replicates"], seed=cfg.seed) for r_ in routes}
    rows = [p.csv_row() for r_ in routes for p in curves[r_].points]
    criteria = {f"{r_}_monotone": curves[r_].is_monotone() for r_ in routes}
    criteria.update({f"{r_}_in_unit_interval": all(-1e-12 <= v <= 1 + 1e-12 for v in curves[r_].values)
                     for r_ in routes})
    results = {}
    if len(routes) == 2:
        gap = max(abs(p.value - q.value) for p, q in zip(*(curves[r_].points for r_ in routes)))
        results["max_gap"] = gap
        criteria["route_agreement"] = gap <= 0.01
    plot = _plot([p.csv_row() for p in curves[routes[-1]].points], "E", "value", "stderr")
    return ("E",) + ANDERSON_COLUMNS, rows, results, criteria, plot, ("E", "k(E)", ""), 0


def _run_anderson_edge(cfg):
    model = an.AndersonModel.parse(cfg.model)
    route, side = cfg.params.get("route", "sturm"), cfg.params.get("side", "lower")
    b = cfg.budgets
    scan = an.edge_scan(model, cfg.grid, side=side, route=route, N=b["N"], realizations=b["realizations"],
                        n=b["n"], replicates=b["replicates"], seed=cfg.seed)
    m = scan.meta
    rows = [p.csv_row(route, m["budget"], m["realizations"], m["seed"]) for p in scan.points]
    resolved = [p for p in scan.points if p.resolved]
    results = {
        "unresolved": [p.eps for p in scan.points if not p.resolved],
        "ratios": {repr(p.eps): p.ratio for p in resolved},
        "fit": scan.fit.to_dict() if scan.fit else None,
    }
    criteria = {
        "ratios_in_range": bool(resolved) and all(-1.0 <= p.ratio <= -0.25 for p in resolved),
        "ratios_decreasing": scan.ratios_decreasing(),
    }
    plot = _plot(rows, "eps", "value", "stderr")
    return ("eps",) + ANDERSON_COLUMNS, rows, results, criteria, plot, ("eps", "rho~", "y"), 0


def _run_rotation(cfg):
    fam, mu = cfg.build_family(), cfg.build_measure()
    b, x0 = cfg.budgets, float(cfg.params.get("x0", 0.0))
    ests = [rot.estimate_rotation_number(fam, E, mu, b["n"], b["replicates"], x0, cfg.seed) for E in cfg.grid]
    rows = [e.csv_row() for e in ests]
    criteria = {"finite": all(math.isfinite(e.rho_hat) for e in ests)}
    plot = _plot(rows, "E", "rho_hat", "stderr")
    return rot.CSV_COLUMNS, rows, {}, criteria, plot, ("E", "rho", ""), 0


def _run_plateau(cfg):
    fam, mu = cfg.build_family(), cfg.build_measure()
    b, x0 = cfg.budgets, float(cfg.params.get("x0", 0.0))
    res = rot.detect_plateau(fam, mu, cfg.grid, n=b["n"], replicates=b["replicates"], x0=x0, seed=cfg.seed)
    rows = [{"E": E, "windings": w, "n": res.n, "replicates": b["replicates"], "seed": cfg.seed}
            for E, w in res.windings.items()]
    plot = _plot(rows, "E", "windings")
    return ("E", "windings", "n", "replicates", "seed"), rows, {}, {"plateau": res.plateau}, plot, ("E", "W", ""), 0


def _run_bracket(cfg):
    fam, mu = cfg.build_family(), cfg.build_measure()
    k = int(cfg.params.get("k", fam.k))
    consts = rot.default_bracket_constants(fam, mu, float(cfg.constants.get("delta", 0.05)))
    consts.update({key: float(cfg.constants[key]) for key in ("A", "a", "b") if key in cfg.constants})
    brs = [rot.rotation_bracket(E, k, consts) for E in cfg.grid]
    rows = [{"E": br.E, "N": br.N, "N_prime": br.N_prime, "ln_lower": br.ln_lower, "ln_upper": br.ln_upper}
            for br in brs]
    results = {"constants": consts}
    criteria = {"ordered": all(br.ordered for br in brs)}
    if len(brs) >= 2:
        _, lo, up = rot.bracket_slopes(cfg.grid, k, consts)
        results.update(lower_slope_last=float(lo[-1]), upper_slope_last=float(up[-1]))
        target = -bn.scaling_exponent(k)
        criteria["lower_slope"] = abs(lo[-1] - target) <= 0.02
        criteria["upper_slope"] = abs(up[-1] - target) <= 0.02
    plot = _plot(rows, "E", "ln_lower")
    return BRACKET_COLUMNS, rows, results, criteria, plot, ("E", "ln lower", "x"), 0


def _run_verify(cfg):
    if cfg.model is not None:
        model = an.AndersonModel.parse(cfg.model)
        rep = an.verify_anderson_hypotheses(model, float(cfg.params.get("r", 0.1)), cfg.params.get("side", "lower"))
    else:
        fam = cfg.build_family()
        mu = cfg.build_measure() if cfg.measure is not None else None
        rep = verify_assumptions(fam, mu)
    d = rep.to_dict()
    rows = [{"check": key, "value": d[key]} for key in ("g1", "g2", "g3", "g4", "m1", "m2", "m3", "k_hat", "c1", "c2")]
    return ("check", "value"), rows, {"report": d}, {"assumptions": rep.passed}, "", None, 0 if rep.passed else 4


PIPELINES = {
    "bottleneck-sweep": _run_bottleneck,
    "anderson-ids": _run_anderson_ids,
    "anderson-edge": _run_anderson_edge,
    "rotation": _run_rotation,
    "plateau": _run_plateau,
    "bracket": _run_bracket,
    "verify": _run_verify,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def run_experiment(config, out_dir=None) -> Report:
    """Run ``config`` (an ``ExperimentConfig``, dict or path) and optionally write its files."""
    if isinstance(config, (str, Path)):
        config = ExperimentConfig.load(config)
    elif isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    t0 = time.perf_counter()
    columns, rows, results, criteria, plot, axes, code = PIPELINES[config.kind](config)
    wall = time.perf_counter() - t0
    summary = _jsonable({
        "kind": config.kind,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "wall_time_s": wall,
        "criteria": {name: bool(v) for name, v in criteria.items()},
        "passed": all(criteria.values()),
        "results": results,
        "backend": BACKEND,
        "threads": thread_count(),
    })
    csv_text = _csv(columns, rows)
    prefix = config.output.get("prefix", config.kind)
    gp = None
    if axes is not None and config.output.get("gnuplot", False):
        gp = gnuplot_script(f"{prefix}.plot.dat", axes[0], axes[1], axes[2])
    report = Report(csv_text, summary, plot, gp, code)
    target = out_dir if out_dir is not None else config.output.get("dir")
    if target is not None:
        report.paths = write_report(report, target, prefix)
    return report


def write_report(report: Report, out_dir, prefix):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{prefix}.csv", "summary": out / f"{prefix}.summary.json"}
    paths["csv"].write_text(report.csv_text)
    paths["summary"].write_text(json.dumps(report.summary, indent=2, sort_keys=True) + "\n")
    if report.plot_data:
        paths["plot"] = out / f"{prefix}.plot.dat"
        paths["plot"].write_text(report.plot_data)
    if report.gnuplot:
        paths["gnuplot"] = out / f"{prefix}.gp"
        paths["gnuplot"].write_text(report.gnuplot)
    return {k: str(v) for k, v in paths.items()}
