"""Command-line front end.

Every subcommand prints JSON to standard output (``solve`` and ``bench``
can print CSV instead).  Exit codes: 0 when every check passes, 1 when a
violation is found, 2 for usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from ._validation import TREE_STREAM, trial_rng
from .analysis import CertificateContext, CertificateParams, estimate_p, expected_y, expected_z, lemma_suite
from .cuts import HierarchyError, check_hierarchy
from .generate import KINDS, generate, library
from .instance import InstanceError, StructureError, load_instance, save_instance, validate
from .pipeline import HalfIntegralTSP

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
DEFAULT_SIZE = {"doubled-cycle": 5, "k4-chain": 2, "nested-cycle": 2, "two-level": 0}


class UsageError(Exception):
    pass


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.ndarray, frozenset, set, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    return json.dumps(obj, indent=indent, default=_default, allow_nan=False)


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"'{args.command}' is stochastic and needs --seed")
    return args.seed


def _fit(args) -> HalfIntegralTSP:
    return HalfIntegralTSP(epsilon=args.epsilon, force_split=args.force_split, n_jobs=getattr(args, "jobs", 1)).fit(
        args.instance
    )


# ---- subcommands --------------------------------------------------------
def cmd_validate(args, out) -> int:
    report = validate(load_instance(args.instance))
    out.write(dumps(report.to_dict()) + "\n")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_generate(args, out) -> int:
    if args.costs == "euclidean":
        _need_seed(args)
    size = DEFAULT_SIZE[args.kind] if args.size is None else args.size
    sol = generate(args.kind, size, costs=args.costs, random_state=args.seed)
    if args.output:
        save_instance(sol, args.output)
        out.write(dumps({"written": str(args.output), "n": sol.n, "edges": len(sol.edges)}) + "\n")
    else:
        out.write(dumps(sol.to_dict()) + "\n")
    return EXIT_OK


def cmd_hierarchy(args, out) -> int:
    model = _fit(args)
    H = model.hierarchy_
    problems = check_hierarchy(H)
    data = H.to_dict()
    data["violations"] = problems
    out.write(dumps(data) + "\n")
    if args.dot:
        Path(args.dot).write_text(H.to_dot())
    return EXIT_VIOLATION if problems else EXIT_OK


def cmd_sample(args, out) -> int:
    seed = _need_seed(args)
    model = _fit(args)
    for i in range(args.count):
        T = model.sample_one_tree(trial_rng(seed, i, TREE_STREAM))
        out.write(dumps({"sample": i, "edges": sorted(T.edges), "odd": sorted(T.odd)}, indent=None) + "\n")
    return EXIT_OK


SUMMARY_FIELDS = ("treeCost", "joinCost", "tourCost", "ratio")


def _solve_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["trial", "treeCost", "joinCost", "tourCost", "ratio", "nOdd"]
    w.writerow(cols)
    for rec in result["records"]:
        w.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c] for c in cols])
    summary = result["summary"]
    for stat in ("mean", "stddev", "max"):
        w.writerow([stat] + [repr(summary[f][stat]) for f in SUMMARY_FIELDS] + [""])
    for k, stat in enumerate(("ci99_low", "ci99_high")):
        w.writerow([stat] + [repr(summary[f]["ci99"][k]) for f in SUMMARY_FIELDS] + [""])
    return buf.getvalue()


def cmd_solve(args, out) -> int:
    seed = _need_seed(args)
    model = _fit(args)
    res = model.solve(n_trials=args.trials, seed=seed, n_jobs=args.jobs)
    result = {
        "instance": str(args.instance),
        "seed": seed,
        "epsilon": args.epsilon,
        "records": [r.to_dict() for r in res["records"]],
        "summary": res["summary"],
    }
    if args.tours:
        tours = []
        for t in range(min(args.tours, args.trials)):
            _, _, J, tour = model.run_trial(seed, t, keep_tour=True)
            tours.append({"trial": t, "tour": tour, "matching": [list(p) for p in J.pairs]})
        result["tours"] = tours
    out.write(_solve_csv(result) if args.format == "csv" else dumps(result) + "\n")
    return EXIT_OK


def cmd_verify_lemmas(args, out) -> int:
    seed = args.seed
    if args.method == "mc":
        seed = _need_seed(args)
    model = _fit(args)
    H, models = model.hierarchy_, model.distributions_
    report = lemma_suite(H, models, method=args.method, n_trials=args.trials, seed=seed)
    data = report.to_dict()
    ok = report.passed
    if args.expectations:
        analysis = estimate_p(H, models, method=args.method, n_trials=args.trials, seed=seed)
        ctx = CertificateContext.build(H, analysis, models, CertificateParams(increase_rule=args.increase_rule))
        rows = []
        for e in range(H.graph.m):
            ey, ez = expected_y(ctx, e), expected_z(ctx, e)
            good = bool(analysis.good[e])
            ok_y = (not good) or ey <= ctx.params.good_bound() + 1e-12
            ok_z = ez <= 0.249962
            rows.append({"edge": e, "good": good, "Ey": ey, "Ez": ez, "passed": ok_y and ok_z})
            ok = ok and ok_y and ok_z
        data["expectations"] = {
            "increaseRule": args.increase_rule,
            "goodBound": ctx.params.good_bound(),
            "zBound": 0.249962,
            "edges": rows,
        }
        data["passed"] = ok
    out.write(dumps(data) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_bench(args, out) -> int:
    seed = _need_seed(args)
    rows = []
    for name, sol in library(costs=args.costs, random_state=seed).items():
        if args.kinds and not any(name.startswith(k) for k in args.kinds):
            continue
        model = HalfIntegralTSP(epsilon=args.epsilon, n_jobs=args.jobs).fit(sol)
        s = model.solve(n_trials=args.trials, seed=seed)["summary"]
        r = s["ratio"]
        limit = 1.5 + 3 * r["stddev"] / math.sqrt(args.trials)
        rows.append(
            {
                "instance": name,
                "n": sol.n,
                "lpCost": s["lpCost"],
                "meanRatio": r["mean"],
                "stddevRatio": r["stddev"],
                "maxRatio": r["max"],
                "ci99Low": r["ci99"][0],
                "ci99High": r["ci99"][1],
                "meanJoinOverLp": s["joinCost"]["mean"] / s["lpCost"],
                "withinBound": r["mean"] <= limit,
            }
        )
    ok = all(row["withinBound"] for row in rows)
    if args.format == "csv":
        buf = io.StringIO()
        cols = list(rows[0]) if rows else ["instance"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
        out.write(buf.getvalue())
    else:
        out.write(dumps({"seed": seed, "trials": args.trials, "epsilon": args.epsilon, "instances": rows, "passed": ok}) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


# ---- parser -------------------------------------------------------------
def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halftsp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_args(p):
        p.add_argument("instance", type=Path, help="instance JSON file")
        p.add_argument("--epsilon", type=_positive_float, default=1e-3, help="marginal fitting tolerance")
        p.add_argument("--force-split", action="store_true", help="always split a vertex for the unit edge")

    p = sub.add_parser("validate", help="check an instance for half-integral feasibility")
    p.add_argument("instance", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="write a synthetic half-integral instance")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--size", type=int, default=None, help="cycle length, block count or nesting depth")
    p.add_argument("--costs", choices=("unit", "euclidean"), default="unit")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("hierarchy", help="print the critical-set hierarchy")
    instance_args(p)
    p.add_argument("--dot", type=Path, default=None, help="also write Graphviz DOT here")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("sample", help="draw 1-trees as JSON lines of half-edge ids")
    instance_args(p)
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--seed", type=_seed, default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("solve", help="run seeded trials and summarise tour costs")
    instance_args(p)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--jobs", type=int, default=-1, help="parallel workers (-1: all cores)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tours", type=int, default=0, help="also emit tours for the first N trials")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify-lemmas", help="check the probabilistic bounds witness by witness")
    instance_args(p)
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--expectations", action="store_true", help="also bound E[y] and E[z] per edge")
    p.add_argument("--increase-rule", choices=("odd", "max"), default="odd")
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("bench", help="solve every library instance and tabulate ratios")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--epsilon", type=_positive_float, default=1e-3)
    p.add_argument("--jobs", type=int, default=-1)
    p.add_argument("--costs", choices=("unit", "euclidean"), default="unit")
    p.add_argument("--kinds", nargs="*", default=None, choices=KINDS)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        code = args.func(args, out)
        out.flush()
        return code
    except UsageError as exc:
        print(f"halftsp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, StructureError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"halftsp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HierarchyError as exc:
        out.write(dumps({"violations": [str(exc)]}) + "\n")
        return EXIT_VIOLATION
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
