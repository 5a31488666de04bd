"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 numerical or certificate failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import oracle
from .closedform import extract_phases, gepm
from .ensemble import gram
from .errors import InputError, NumericalError, UnsupportedDimension
from .povm import build_povm, simulate
from .reports import SolutionReport, complex_to_json, load_problem
from .solver import Classification, SolverConfig, optimize

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, keep exit code 2 for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_seed():
    raw = os.environ.get("UDISC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"UDISC_SEED: not an integer: {raw!r}") from None


def _seed(args):
    return args.seed if args.seed is not None else _default_seed()


def _config(args) -> SolverConfig:
    defaults = SolverConfig()
    try:
        return SolverConfig(
            tol_cert=args.tol if args.tol is not None else defaults.tol_cert,
            max_iter=args.max_iter if args.max_iter is not None else defaults.max_iter,
            multistarts=args.multistarts if args.multistarts is not None else defaults.multistarts,
            rng_seed=_seed(args),
        )
    except ValueError as exc:
        raise InputError(f"solver flags: {exc}") from None


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(doc):
    return json.dumps(doc, indent=2) + "\n"


def cmd_solve(args):
    problem = load_problem(args.problem)
    ens = problem.ensemble()
    sol = optimize(ens, _config(args))
    report = SolutionReport.from_solution(sol)
    if args.phases and sol.classification is Classification.INTERIOR:
        ph = extract_phases(gram(ens), ens.priors, sol.p_opt)
        report.phases = [float(t) for t in ph.thetas]
        report.residuals["xi"] = ph.xi
    if args.povm:
        P = build_povm(ens, sol.p_opt)
        report.povm = {"elements": [complex_to_json(E) for E in P.elements],
                       "inconclusive": complex_to_json(P.inconclusive)}
        report.residuals["povm"] = {k: float(v) for k, v in P.residuals.items()}
    if args.verify:
        X = gram(ens)
        sample = oracle.sample_surface(X, ens.priors, args.verify, seed=_seed(args))
        best = sample.best
        if args.refine:
            best = oracle.refine(X, ens.priors, best, args.refine, seed=_seed(args))
        report.oracle_gap = float(sol.p_bar - ens.priors @ best)
    report.validate()
    _write(report.dumps(), args.out)


def cmd_gepm(args):
    problem = load_problem(args.problem)
    if problem.weights is None:
        raise InputError("weights: missing from problem file")
    ens = problem.ensemble()
    res = gepm(ens, problem.weights)
    doc = {
        "p": res.p.tolist(),
        "sigma_min": res.sigma_min,
        "classification": res.classification.value,
        "priors": None if res.priors is None else res.priors.tolist(),
        "minors": res.minors.tolist(),
    }
    _write(_dump(doc), args.out)


def cmd_simulate(args):
    problem = load_problem(args.problem)
    ens = problem.ensemble()
    if args.trials < 1:
        raise InputError("--trials: must be at least 1")
    sol = optimize(ens, _config(args))
    P = build_povm(ens, sol.p_opt)
    rep = simulate(P, ens, args.trials, seed=_seed(args), shards=args.shards)
    doc = rep.to_dict()
    doc["p_bar"] = sol.p_bar
    _write(_dump(doc), args.out)


def cmd_region(args):
    problem = load_problem(args.problem)
    ens = problem.ensemble()
    if ens.n != 3:
        raise UnsupportedDimension(f"states: region export needs n = 3, got {ens.n}")
    if args.samples < 1:
        raise InputError("--samples: must be at least 1")
    sample = oracle.sample_surface(gram(ens), ens.priors, args.samples, seed=_seed(args))
    rows = ["p1,p2,p3"]
    rows += [",".join(format(x, ".17g") for x in pt) for pt in sample.points]
    _write("\n".join(rows) + "\n", args.out)


def _solver_flags(p):
    p.add_argument("--tol", type=float, help="certificate tolerance (default 1e-8)")
    p.add_argument("--max-iter", type=int, help="Newton iterations per start (default 60)")
    p.add_argument("--multistarts", type=int, help="random restarts per stage (default 32)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udisc", description="Optimum unambiguous discrimination of pure states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="optimal success probabilities and classification")
    p.add_argument("problem")
    p.add_argument("--verify", type=int, metavar="N", default=0,
                   help="compare against the sampling oracle with N samples")
    p.add_argument("--refine", type=int, metavar="ITERS", default=0,
                   help="pattern-search iterations after sampling (with --verify)")
    p.add_argument("--phases", action="store_true", help="report phases at an interior optimum")
    p.add_argument("--povm", action="store_true", help="embed the measurement operators")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gepm", help="priors making success probabilities proportional to weights")
    p.add_argument("problem")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gepm)

    p = sub.add_parser("simulate", help="Monte Carlo run of the optimal measurement")
    p.add_argument("problem")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    _solver_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("region", help="CSV point cloud of the critical surface (n = 3)")
    p.add_argument("problem")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_region)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, OSError) as exc:
        print(f"udisc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"udisc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
