"""Command-line entry point: ``lifshitz <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 budget exhausted,
4 hypothesis-check failure. ``LIFSHITZ_THREADS`` sets the worker count.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import anderson as an
from . import bottleneck as bn
from . import rotation as rot
from .disorder import parse_measure
from .dynamics import get_family, verify_assumptions
from .errors import AssumptionViolation, BudgetExhausted, InconclusiveOrderError, LifshitzError
from .experiment import ANDERSON_COLUMNS, BOTTLENECK_COLUMNS, _csv, run_experiment
from .fitting import fit_lifshitz_exponent

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_HYPOTHESIS = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def float_list(text):
    """``1e-3,1e-4`` or ``start:stop:count`` (inclusive linspace)."""
    if ":" in text:
        a, b, n = text.split(":")
        n = int(n)
        if n < 1:
            raise argparse.ArgumentTypeError("grid count must be positive")
        if n == 1:
            return [float(a)]
        step = (float(b) - float(a)) / (n - 1)
        return [float(a) + i * step for i in range(n)]
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def key_value(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected key=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family(args):
    return get_family(args.family, **dict(args.param or []))


def build_parser():
    p = _Parser(prog="lifshitz", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def family_args(sp, measure_default="uniform:0.15"):
        sp.add_argument("--family", default="model")
        sp.add_argument("--param", action="append", type=key_value, help="family parameter key=value")
        sp.add_argument("--measure", default=measure_default, help="e.g. uniform:0.15, bernoulli:0@0.5,0.1@0.5")

    v = sub.add_parser("verify-assumptions", help="check (G1)-(G4), (M1)-(M3) numerically")
    family_args(v)
    v.add_argument("--mu", help="Anderson potential (uniform:a,b | bernoulli:a,b,p | atom:a); overrides --family")
    v.add_argument("--r", type=float, default=0.1)
    v.add_argument("--side", choices=("lower", "upper"), default="lower")
    v.add_argument("--json", action="store_true")

    r = sub.add_parser("rotnum", help="estimate rotation numbers")
    family_args(r)
    r.add_argument("--E", type=float_list, required=True)
    r.add_argument("--n", type=int, default=10**6)
    r.add_argument("--replicates", type=int, default=8)
    r.add_argument("--x0", type=float, default=0.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--adaptive", action="store_true", help="run to 50 windings or --cap total steps")
    r.add_argument("--cap", type=int, default=rot.ADAPTIVE_CAP)
    r.add_argument("--out")

    pl = sub.add_parser("plateau", help="zero-winding test at negative E")
    family_args(pl)
    pl.add_argument("--E", type=float_list, required=True)
    pl.add_argument("--n", type=int, default=10**7)
    pl.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bottleneck", help="passage-time experiments")
    bsub = b.add_subparsers(dest="action", required=True, parser_class=_Parser)
    bs = bsub.add_parser("sweep", help="passage -delta -> delta over an eps grid")
    bs.add_argument("--k", type=int, default=1)
    bs.add_argument("--lambda", "--lam", dest="lam", type=float, default=1.0)
    bs.add_argument("--delta", type=float, default=0.1)
    bs.add_argument("--eps-grid", type=float_list, default=[1e-3, 1e-4, 1e-5, 1e-6])
    bs.add_argument("--cap", type=int, default=bn.DEFAULT_CAP)
    bs.add_argument("--out")

    a = sub.add_parser("anderson", help="1D Anderson model IDS and edges")
    asub = a.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ai = asub.add_parser("ids", help="IDS on an energy grid")
    ae = asub.add_parser("edge", help="edge-normalized rotation number on an eps grid")
    for sp in (ai, ae):
        sp.add_argument("--mu", default="uniform:0,1")
        sp.add_argument("--N", type=int, default=10**4)
        sp.add_argument("--realizations", type=int, default=20)
        sp.add_argument("--n", type=int, default=10**6)
        sp.add_argument("--replicates", type=int, default=8)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
    ai.add_argument("--route", choices=("rotation", "sturm", "both", "free"), default="both")
    ai.add_argument("--grid", type=float_list, default=float_list("-1.5:2.5:20"))
    ae.add_argument("--side", choices=("lower", "upper"), default="lower")
    ae.add_argument("--route", choices=("rotation", "sturm"), default="sturm")
    ae.add_argument("--eps-grid", type=float_list, default=[0.4, 0.3, 0.2, 0.1, 0.05])

    f = sub.add_parser("fit", help="fit ln(-ln drho) against ln E")
    f.add_argument("--pairs", help="E:drho,E:drho,...")
    f.add_argument("--csv", help="CSV file with columns E (or eps) and value")

    run = sub.add_parser("run", help="run a JSON experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides the config)")
    return p


def cmd_verify(args):
    if args.mu:
        rep = an.verify_anderson_hypotheses(an.AndersonModel.parse(args.mu), args.r, args.side)
    else:
        mu = parse_measure(args.measure) if args.measure else None
        rep = verify_assumptions(_family(args), mu)
    print(rep.to_json() if args.json else rep.to_text())
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def cmd_rotnum(args):
    fam, mu = _family(args), parse_measure(args.measure)
    rows, code = [], EXIT_OK
    for E in args.E:
        if args.adaptive:
            res = rot.estimate_rotation_adaptive(fam, E, mu, args.replicates, args.x0, args.seed, cap=args.cap)
            rows.append(res.estimate.csv_row())
            if res.capped:
                print(f"# E={E!r}: capped at {res.total_steps} steps; rho <= {res.upper_bound:.3e} (95%)",
                      file=sys.stderr)
                code = EXIT_BUDGET
        else:
            rows.append(rot.estimate_rotation_number(fam, E, mu, args.n, args.replicates, args.x0, args.seed).csv_row())
    _emit(_csv(rot.CSV_COLUMNS, rows), args.out)
    return code


def cmd_plateau(args):
    res = rot.detect_plateau(_family(args), parse_measure(args.measure), args.E, n=args.n, seed=args.seed)
    for E, w in res.windings.items():
        print(f"E={E!r} windings={w} n={res.n}")
    print(f"plateau: {res.plateau}")
    return EXIT_OK


def cmd_bottleneck(args):
    res = bn.scaling_sweep(args.k, args.lam, args.delta, sorted(args.eps_grid, reverse=True), cap=args.cap)
    _emit(_csv(BOTTLENECK_COLUMNS, list(res.rows())), args.out)
    print(f"# slope={res.slope:.4f} target={-bn.scaling_exponent(args.k):.4f} residual={res.residual:.3g}",
          file=sys.stderr)
    return EXIT_OK


def cmd_anderson(args):
    model = an.AndersonModel.parse(args.mu)
    if args.action == "ids":
        routes = ("rotation", "sturm") if args.route == "both" else (args.route,)
        rows = []
        for route in routes:
            curve = an.ids_curve(model, args.grid, route, N=args.N, realizations=args.realizations, n=args.n,
                                 replicates=args.replicates, seed=args.seed)
            rows += [p.csv_row() for p in curve.points]
        _emit(_csv(("E",) + ANDERSON_COLUMNS, rows), args.out)
        return EXIT_OK
    scan = an.edge_scan(model, args.eps_grid, side=args.side, route=args.route, N=args.N,
                        realizations=args.realizations, n=args.n, replicates=args.replicates, seed=args.seed)
    m = scan.meta
    rows = [p.csv_row(args.route, m["budget"], m["realizations"], m["seed"]) for p in scan.points]
    _emit(_csv(("eps",) + ANDERSON_COLUMNS, rows), args.out)
    flagged = [p.eps for p in scan.points if not p.resolved]
    if flagged:
        print(f"# unresolved: {flagged}", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args):
    import csv

    pairs = []
    if args.pairs:
        for item in args.pairs.split(","):
            E, _, d = item.partition(":")
            pairs.append((float(E), float(d)))
    if args.csv:
        with open(args.csv) as fh:
            for row in csv.DictReader(fh):
                pairs.append((float(row.get("E", row.get("eps"))), float(row["value"])))
    fit = fit_lifshitz_exponent(pairs)
    print(json.dumps(fit.to_dict(), indent=2))
    return EXIT_OK


def cmd_run(args):
    rep = run_experiment(args.config, out_dir=args.out)
    if not rep.paths:
        sys.stdout.write(rep.csv_text)
    print(json.dumps(rep.summary, indent=2, sort_keys=True), file=sys.stderr)
    return rep.exit_code


COMMANDS = {
    "verify-assumptions": cmd_verify,
    "rotnum": cmd_rotnum,
    "plateau": cmd_plateau,
    "bottleneck": cmd_bottleneck,
    "anderson": cmd_anderson,
    "fit": cmd_fit,
    "run": cmd_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (AssumptionViolation, InconclusiveOrderError) as exc:
        print(f"hypothesis check failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (LifshitzError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
