"""Command-line front end: generate instances, solve, verify, benchmark.

Every verification subcommand exits 0 exactly when all of its assertions
hold, so the suites can gate CI directly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import harness
from .errors import KsubmaxError
from .harness import ExperimentConfig
from .multilinear import check_extension_properties
from .oracles import check_k_submodularity
from .solvers import brute_force_opt


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", default="coverage",
                   choices=["coverage", "disjoint_cut", "tabular_rejection", "nonmonotone_mix"])
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--k", type=int, nargs="+", default=[2, 3])
    p.add_argument("--cost-min", type=int, default=1)
    p.add_argument("--cost-max", type=int, default=5)
    p.add_argument("--unit-costs", action="store_true")
    p.add_argument("--budget-alpha", type=_fraction, nargs="+",
                   default=[Fraction(3, 10), Fraction(1, 2)])
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 10))
    p.add_argument("--q", type=int, default=1)


def _config_from(args, algorithms=None) -> ExperimentConfig:
    return ExperimentConfig(
        family=args.family,
        count=args.count,
        seed=args.seed,
        n_range=(args.n_min, args.n_max),
        k_choices=tuple(args.k),
        cost_range=(args.cost_min, args.cost_max),
        budget_alphas=tuple(args.budget_alpha),
        unit_costs=args.unit_costs,
        algorithms=tuple(algorithms or ()),
        epsilon=args.epsilon,
        q=args.q,
        threads=args.threads,
    )


def cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    config = _config_from(args)
    for inst_id, inst in harness.build_corpus(config):
        harness.save_instance(inst, os.path.join(args.out, f"{inst_id}.json"))
    print(f"wrote {config.count} instances to {args.out}")
    return 0


def cmd_solve(args) -> int:
    inst = harness.load_instance(args.instance)
    name = args.algorithm.replace("-", "_")
    if name == "brute_force":
        res = brute_force_opt(inst)
    else:
        if name not in harness.ALGORITHM_RUNNERS:
            print(f"unknown algorithm {args.algorithm!r}", file=sys.stderr)
            return 2
        cfg = ExperimentConfig(epsilon=args.epsilon, q=args.q)
        res = harness.ALGORITHM_RUNNERS[name](inst, cfg)
    out = {
        "algorithm": args.algorithm,
        "value": res.value,
        "solution": list(res.solution),
        "queries": res.queries,
    }
    if res.guess_used is not None:
        out["guess_used"] = list(res.guess_used)
    json.dump(out, sys.stdout)
    print()
    return 0


def cmd_verify_oracle(args) -> int:
    inst = harness.load_instance(args.instance)
    report = check_k_submodularity(inst.oracle)
    if report.ok:
        print(f"ok: {args.instance} is orthant submodular and pairwise monotone")
        return 0
    print(f"FAIL: {report.condition} violated at {report.witness}")
    return 1


def cmd_verify_extension(args) -> int:
    inst = harness.load_instance(args.instance)
    report = check_extension_properties(inst, points=args.points, seed=args.seed)
    counts = ", ".join(f"{k}={v}" for k, v in report.checks.items())
    print(f"checked {report.points} points ({counts}); violations: {len(report.violations)}")
    for v in report.violations[:10]:
        print(f"  {v.prop}: {v.detail}")
    return 0 if report.ok else 1


def cmd_verify_bounds(args) -> int:
    algorithms = [a.replace("-", "_") for a in args.algorithms]
    config = _config_from(args, algorithms=algorithms)
    report = harness.run_bound_suite(config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        harness.write_bound_csv(report, os.path.join(args.out, "bounds.csv"))
    for name, ratio in sorted(report.min_ratio.items()):
        print(f"{name}: worst ratio {ratio} ({float(ratio):.4f}) over {config.count} instances")
    failures = [r for r in report.rows if not r.passed]
    print(f"{'PASS' if report.ok else 'FAIL'}: {len(report.rows) - len(failures)}/{len(report.rows)} rows hold")
    for r in failures[:10]:
        print(f"  {r.instance_id} {r.algorithm}: value {r.value}, opt {r.opt}, bound {r.bound}")
    return 0 if report.ok else 1


def cmd_verify_lemmas(args) -> int:
    config = _config_from(args)
    report = harness.run_lemma_suite(config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        harness.write_lemma_csv(report, os.path.join(args.out, "lemmas.csv"))
    occurred = [r for r in report.rows if r.occurred]
    holds = [r for r in occurred if r.holds]
    print(f"rejection events: {len(occurred)}/{len(report.rows)}; bound holds: {len(holds)}/{len(occurred)}")
    path_ok = [p for p in report.path_rows if p.ok]
    print(f"paths verified: {len(path_ok)}/{len(report.path_rows)}; "
          f"infeasible schedules: {report.infeasible_schedules}")
    print("PASS" if report.ok else "FAIL")
    return 0 if report.ok else 1


def cmd_bench(args) -> int:
    config = ExperimentConfig(
        seed=args.seed, epsilon=args.epsilon, sizes=tuple(args.sizes), bench_k=args.k
    )
    report = harness.run_query_benchmark(config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        harness.write_query_csv(report, os.path.join(args.out, "queries.csv"))
    for r in report.rows:
        env = "" if r.envelope is None else f" (envelope {r.envelope}: {'ok' if r.within_envelope else 'EXCEEDED'})"
        print(f"n={r.n} {r.algorithm}: {r.queries} queries{env}")
    for name, ratios in report.growth.items():
        lo, hi = report.GROWTH_WINDOWS[name]
        shown = ", ".join(f"{g:.2f}" for g in ratios)
        print(f"{name} doubling growth: {shown} (window [{lo}, {hi}])")
    print("PASS" if report.ok else "FAIL")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ksubmax",
                                description="budgeted k-dimensional submodular maximization toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate seeded instance files")
    _add_corpus_args(g)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("solve", help="run one solver on one instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", required=True)
    s.add_argument("--q", type=int, default=1)
    s.add_argument("--epsilon", type=_fraction, default=Fraction(1, 10))
    s.set_defaults(fn=cmd_solve)

    vo = sub.add_parser("verify-oracle", help="certify k-submodularity exhaustively")
    vo.add_argument("--instance", required=True)
    vo.set_defaults(fn=cmd_verify_oracle)

    ve = sub.add_parser("verify-extension", help="check extension properties at random points")
    ve.add_argument("--instance", required=True)
    ve.add_argument("--points", type=int, default=50)
    ve.add_argument("--seed", type=int, default=0)
    ve.set_defaults(fn=cmd_verify_extension)

    vb = sub.add_parser("verify-bounds", help="assert approximation bounds against brute force")
    _add_corpus_args(vb)
    vb.add_argument("--algorithms", nargs="+",
                    default=["one-guess-greedy", "greedy-plus-singleton", "greedy-plus"])
    vb.add_argument("--out", default=None)
    vb.set_defaults(fn=cmd_verify_bounds)

    vl = sub.add_parser("verify-lemmas", help="assert rejection-prefix bounds and path inequalities")
    _add_corpus_args(vl)
    vl.add_argument("--out", default=None)
    vl.set_defaults(fn=cmd_verify_lemmas)

    b = sub.add_parser("bench", help="count value-oracle queries across sizes")
    b.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--epsilon", type=_fraction, default=Fraction(1, 10))
    b.add_argument("--out", default=None)
    b.set_defaults(fn=cmd_bench)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except KsubmaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
