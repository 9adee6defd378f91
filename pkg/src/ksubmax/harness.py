"""Instance files, seeded corpora, verification suites and CSV reports.

The suites are the executable form of the approximation guarantees: every
bound is asserted as an exact rational inequality against a brute-force
optimum at desk scale.  A (config, seed) pair determines the whole corpus,
and all reductions are ordered, so reports are identical across thread
counts (runtime columns aside).
"""

from __future__ import annotations

import csv
import json
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .core import Instance, cost, support, validate_instance
from .errors import InfeasibleSchedule, IoError, KsubmaxError, SchemaError
from .multilinear import build_path, verify_path
from .oracles import (
    CoverageOracle,
    DisjointCutOracle,
    TabularOracle,
    extend_with_null_elements,
    generate_instance,
)
from .solvers import (
    best_feasible_singleton,
    brute_force_opt,
    first_rejection_prefix,
    greedy,
    greedy_plus,
    greedy_plus_singleton,
    q_guess_greedy,
    threshold_greedy,
)

# ---------------------------------------------------------------------------
# instance files


def instance_to_dict(inst: Instance) -> dict:
    orc = inst.oracle
    d = {
        "n": inst.n,
        "k": inst.k,
        "budget": inst.budget,
        "costs": list(inst.costs),
        "monotone": inst.monotone,
        "oracle": {"family": inst.family},
    }
    if isinstance(orc, CoverageOracle):
        d["oracle"]["coverage"] = {
            "universe_weights": list(orc.universe_weights),
            "gamma": [[sorted(s) for s in per_elem] for per_elem in orc.gamma],
        }
    elif isinstance(orc, DisjointCutOracle):
        d["oracle"]["disjoint_cut"] = {"edges": [list(e) for e in orc.edges]}
    elif isinstance(orc, TabularOracle):
        d["oracle"]["tabular"] = {"values": list(orc.values)}
    else:
        raise SchemaError(f"oracle family {inst.family!r} has no file form")
    return d


def instance_from_dict(d: dict) -> Instance:
    try:
        n, k = int(d["n"]), int(d["k"])
        budget = int(d["budget"])
        costs = [int(c) for c in d["costs"]]
        monotone = bool(d["monotone"])
        spec = d["oracle"]
        family = spec["family"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc

    try:
        if family == "coverage":
            payload = spec["coverage"]
            gamma = tuple(
                tuple(frozenset(s) for s in per_elem) for per_elem in payload["gamma"]
            )
            oracle = CoverageOracle(tuple(payload["universe_weights"]), gamma, k)
        elif family == "disjoint_cut":
            payload = spec["disjoint_cut"]
            oracle = DisjointCutOracle(n, k, tuple(tuple(e) for e in payload["edges"]))
        elif family == "tabular":
            payload = spec["tabular"]
            values = tuple(payload["values"])
            if len(values) != (k + 1) ** n:
                raise SchemaError(
                    f"tabular values length {len(values)}, expected {(k + 1) ** n}"
                )
            oracle = TabularOracle(n, k, values)
        else:
            raise SchemaError(f"unknown oracle family {family!r}")
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, KsubmaxError) as exc:
        raise SchemaError(f"bad oracle payload: {exc}") from exc

    if oracle.n != n:
        raise SchemaError(f"oracle describes {oracle.n} elements, header says {n}")
    try:
        inst = validate_instance(oracle, costs, budget)
    except KsubmaxError as exc:
        raise SchemaError(f"invalid instance: {exc}") from exc
    if inst.monotone != monotone:
        raise SchemaError(
            f"monotone flag {monotone} contradicts the {family} family ({inst.monotone})"
        )
    return inst


def save_instance(inst: Instance, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(instance_to_dict(inst), fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_instance(path) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(d)


# ---------------------------------------------------------------------------
# configuration and corpora


@dataclass(frozen=True)
class ExperimentConfig:
    """Deterministic description of a corpus and the runs over it."""

    family: str = "coverage"  # coverage | disjoint_cut | tabular_rejection | nonmonotone_mix
    count: int = 20
    seed: int = 0
    n_range: tuple = (4, 8)
    k_choices: tuple = (2, 3)
    cost_range: tuple = (1, 5)
    budget_alphas: tuple = (Fraction(3, 10), Fraction(1, 2))
    unit_costs: bool = False
    algorithms: tuple = ("one_guess_greedy",)
    epsilon: Fraction = Fraction(1, 10)
    q: int = 1
    threads: int = 1
    references_per_instance: int = 3
    path_n_cap: int = 8
    sizes: tuple = (20, 40, 80)
    bench_k: int = 2


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _instance_family(config: ExperimentConfig, index: int, rng: random.Random) -> str:
    if config.family == "nonmonotone_mix":
        # 5:1 cut-to-tabular mix mirrors the corpus sizes the suites assert
        return "disjoint_cut" if index % 6 != 5 else "tabular_rejection"
    return config.family


def build_corpus(config: ExperimentConfig) -> list:
    """The list of (instance_id, Instance) pairs a config denotes."""
    corpus = []
    for i in range(config.count):
        rng = random.Random(f"corpus:{config.seed}:{i}")
        family = _instance_family(config, i, rng)
        lo, hi = config.n_range
        if family == "tabular_rejection":
            hi = min(hi, 5)
            lo = min(lo, hi)
        n = rng.randint(lo, hi)
        k = rng.choice(list(config.k_choices))
        alpha = config.budget_alphas[0] if i < config.count // 2 else config.budget_alphas[-1]
        inst = generate_instance(
            family,
            seed=f"{config.seed}:{i}",
            n=n,
            k=k,
            cost_range=config.cost_range,
            unit_costs=config.unit_costs,
            budget_alpha=alpha,
        )
        corpus.append((f"{family}-{config.seed}-{i:04d}", inst))
    return corpus


# ---------------------------------------------------------------------------
# bound suite

ALGORITHM_RUNNERS = {
    "greedy": lambda inst, cfg: greedy(inst),
    "one_guess_greedy": lambda inst, cfg: q_guess_greedy(inst, 1),
    "q_guess_greedy": lambda inst, cfg: q_guess_greedy(inst, cfg.q),
    "greedy_plus_singleton": lambda inst, cfg: greedy_plus_singleton(inst),
    "greedy_plus": lambda inst, cfg: greedy_plus(inst),
    "threshold_greedy": lambda inst, cfg: threshold_greedy(inst, cfg.epsilon, with_guess=True),
}


def bound_for(algorithm: str, inst: Instance, config: ExperimentConfig) -> Fraction:
    """The exact ratio asserted for this algorithm on this instance.

    Zero means report-only: no guarantee is claimed for that combination.
    """
    monotone = inst.monotone
    unit = all(c == 1 for c in inst.costs)
    if algorithm == "one_guess_greedy" or (algorithm == "q_guess_greedy" and config.q == 1):
        return Fraction(1, 2) if monotone else Fraction(1, 3)
    if algorithm == "greedy_plus_singleton":
        return Fraction(1, 3) if monotone else Fraction(1, 4)
    if algorithm == "greedy" and unit:
        return Fraction(1, 2) if monotone else Fraction(1, 3)
    if algorithm == "threshold_greedy" and monotone:
        return Fraction(1, 2) - config.epsilon
    return Fraction(0)


@dataclass
class BoundReportRow:
    instance_id: str
    family: str
    n: int
    k: int
    budget: int
    algorithm: str
    value: int
    opt: int
    ratio: Fraction
    bound: Fraction
    passed: bool
    queries: int
    seed: int
    runtime_ms: float


@dataclass
class BoundReport:
    rows: list
    min_ratio: dict

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)


def run_bound_suite(config: ExperimentConfig) -> BoundReport:
    corpus = build_corpus(config)

    def run_one(item):
        inst_id, inst = item
        opt = brute_force_opt(inst).value
        rows = []
        for name in config.algorithms:
            start = time.perf_counter()
            res = ALGORITHM_RUNNERS[name](inst, config)
            elapsed_ms = (time.perf_counter() - start) * 1e3
            ratio = Fraction(res.value, opt) if opt else Fraction(1)
            bound = bound_for(name, inst, config)
            rows.append(
                BoundReportRow(
                    instance_id=inst_id,
                    family=inst.family,
                    n=inst.n,
                    k=inst.k,
                    budget=inst.budget,
                    algorithm=name,
                    value=res.value,
                    opt=opt,
                    ratio=ratio,
                    bound=bound,
                    passed=ratio >= bound,
                    queries=res.queries,
                    seed=config.seed,
                    runtime_ms=elapsed_ms,
                )
            )
        return rows

    nested = _pmap(run_one, corpus, config.threads)
    rows = [r for group in nested for r in group]
    min_ratio = {}
    for r in rows:
        cur = min_ratio.get(r.algorithm)
        if cur is None or r.ratio < cur:
            min_ratio[r.algorithm] = r.ratio
    return BoundReport(rows=rows, min_ratio=min_ratio)


# ---------------------------------------------------------------------------
# lemma suite


def random_feasible_solution(inst: Instance, rng: random.Random) -> tuple:
    x = [0] * inst.n
    budget_left = inst.budget
    order = list(range(inst.n))
    rng.shuffle(order)
    for e in order:
        if inst.costs[e] <= budget_left and rng.random() < 0.7:
            x[e] = rng.randint(1, inst.k)
            budget_left -= inst.costs[e]
    return tuple(x)


@dataclass
class LemmaRow:
    instance_id: str
    reference_kind: str
    occurred: bool
    beta: Optional[Fraction]
    prefix_value: Optional[int]
    reference_value: Optional[int]
    bound: Optional[Fraction]
    holds: Optional[bool]


@dataclass
class PathRow:
    instance_id: str
    source: str  # "rejection" | "restriction"
    n_padded: int
    segments: int
    midpoint_violations: int
    telescoping_ok: bool
    ok: bool


@dataclass
class LemmaReport:
    rows: list
    path_rows: list
    infeasible_schedules: int

    @property
    def ok(self) -> bool:
        bound_ok = all(r.holds for r in self.rows if r.occurred)
        return bound_ok and all(p.ok for p in self.path_rows)


def _beta_bound(beta: Fraction, monotone: bool) -> Fraction:
    if monotone:
        return min(beta / 2, Fraction(1, 2))
    return min(beta / 3, Fraction(1, 3))


def _verify_padded_path(inst: Instance, reference, picks, cap: int):
    """Pad the reference side up to the trace cost and verify the schedule.

    Only callable when cost(trace) >= cost(reference); returns None when the
    padded ground set would exceed the cap.
    """
    s_cost = sum(inst.costs[e] for e, _ in picks)
    deficit = s_cost - cost(reference, inst)
    if deficit < 0:
        raise ValueError("reference is costlier than the trace")
    if deficit == 0:
        ext, o_pad = inst, tuple(reference)
    else:
        if inst.n + 1 > cap:
            return None
        ext = extend_with_null_elements(inst, (deficit,))
        o_pad = tuple(reference) + (1,)
    if ext.n > cap:
        return None
    path = build_path(ext, o_pad, picks)
    return verify_path(ext, path)


def run_lemma_suite(config: ExperimentConfig) -> LemmaReport:
    corpus = build_corpus(config)

    def run_one(item):
        inst_id, inst = item
        f = inst.oracle.evaluate
        opt = brute_force_opt(inst).solution
        rng = random.Random(f"lemma:{config.seed}:{inst_id}")
        refs = [("optimum", opt)] + [
            (f"random-{t}", random_feasible_solution(inst, rng))
            for t in range(config.references_per_instance)
        ]
        rows = []
        path_row = None
        infeasible = 0
        path_candidate = None
        for kind, ref in refs:
            rec = first_rejection_prefix(inst, ref)
            if not rec.occurred:
                rows.append(
                    LemmaRow(inst_id, kind, False, None, None, None, None, None)
                )
                continue
            bound = _beta_bound(rec.beta, inst.monotone)
            fp, fr = f(rec.prefix), f(ref)
            rows.append(
                LemmaRow(
                    instance_id=inst_id,
                    reference_kind=kind,
                    occurred=True,
                    beta=rec.beta,
                    prefix_value=fp,
                    reference_value=fr,
                    bound=bound,
                    holds=fp >= bound * fr,
                )
            )
            if path_candidate is None and rec.beta >= 1:
                path_candidate = (kind, ref, rec)

        if path_candidate is not None:
            kind, ref, rec = path_candidate
            try:
                report = _verify_padded_path(inst, ref, rec.picks, config.path_n_cap)
            except InfeasibleSchedule:
                infeasible += 1
                report = None
            if report is not None:
                path_row = PathRow(
                    instance_id=inst_id,
                    source="rejection",
                    n_padded=inst.n + (1 if rec.beta > 1 else 0),
                    segments=len(report.segment_checks),
                    midpoint_violations=len(report.violations),
                    telescoping_ok=report.telescoping_ok,
                    ok=report.ok,
                )
        if path_row is None:
            # fall back to a restriction of the greedy solution: its support
            # is a subset of the trace's, so the padded schedule always exists
            g = greedy(inst)
            picks = g.trace.accepted_picks
            if picks:
                keep = [0] * inst.n
                for e, j in picks:
                    if rng.random() < 0.6:
                        keep[e] = j
                try:
                    report = _verify_padded_path(
                        inst, tuple(keep), picks, config.path_n_cap
                    )
                except InfeasibleSchedule:
                    infeasible += 1
                    report = None
                if report is not None:
                    path_row = PathRow(
                        instance_id=inst_id,
                        source="restriction",
                        n_padded=inst.n + (1 if cost(tuple(keep), inst) < cost(g.solution, inst) else 0),
                        segments=len(report.segment_checks),
                        midpoint_violations=len(report.violations),
                        telescoping_ok=report.telescoping_ok,
                        ok=report.ok,
                    )
        return rows, path_row, infeasible

    results = _pmap(run_one, corpus, config.threads)
    rows = [r for group, _, _ in results for r in group]
    path_rows = [p for _, p, _ in results if p is not None]
    infeasible = sum(i for _, _, i in results)
    return LemmaReport(rows=rows, path_rows=path_rows, infeasible_schedules=infeasible)


# ---------------------------------------------------------------------------
# query benchmark


@dataclass
class QueryRow:
    n: int
    k: int
    algorithm: str
    queries: int
    envelope: Optional[int]
    within_envelope: Optional[bool]


@dataclass
class QueryReport:
    rows: list
    growth: dict  # algorithm -> list of consecutive-doubling ratios

    GROWTH_WINDOWS = {"one_guess_greedy": (6.0, 10.0), "threshold_greedy": (3.0, 6.0)}

    @property
    def ok(self) -> bool:
        env_ok = all(r.within_envelope for r in self.rows if r.within_envelope is not None)
        for name, ratios in self.growth.items():
            lo, hi = self.GROWTH_WINDOWS[name]
            if any(not lo <= g <= hi for g in ratios):
                return False
        return env_ok


def run_query_benchmark(config: ExperimentConfig) -> QueryReport:
    """Counted queries of the guessing greedy and its threshold variant.

    Asserts the cubic envelope 4 n^3 k^2 for the former and doubling-growth
    windows consistent with cubic vs near-quadratic scaling.
    """
    k = config.bench_k
    rows = []
    counts = {"one_guess_greedy": [], "threshold_greedy": []}
    for n in config.sizes:
        inst = generate_instance(
            "coverage",
            seed=f"bench:{config.seed}:{n}",
            n=n,
            k=k,
            universe=40,
            density=0.15,
            cost_range=config.cost_range,
            budget_alpha=Fraction(1, 2),
        )
        res = q_guess_greedy(inst, 1)
        envelope = 4 * n**3 * k**2
        rows.append(
            QueryRow(n, k, "one_guess_greedy", res.queries, envelope, res.queries <= envelope)
        )
        counts["one_guess_greedy"].append(res.queries)
        thr = threshold_greedy(inst, config.epsilon, with_guess=True)
        rows.append(QueryRow(n, k, "threshold_greedy", thr.queries, None, None))
        counts["threshold_greedy"].append(thr.queries)
    growth = {
        name: [b / a for a, b in zip(vals, vals[1:])] for name, vals in counts.items()
    }
    return QueryReport(rows=rows, growth=growth)


# ---------------------------------------------------------------------------
# CSV emission


def _frac(x) -> str:
    if x is None:
        return ""
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else str(x)


BOUND_CSV_COLUMNS = [
    "instance_id",
    "family",
    "n",
    "k",
    "budget",
    "algorithm",
    "value",
    "opt",
    "ratio_exact",
    "ratio_decimal",
    "bound",
    "pass",
    "queries",
    "seed",
    "runtime_ms",
]


def write_bound_csv(report: BoundReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BOUND_CSV_COLUMNS)
        for r in report.rows:
            w.writerow(
                [
                    r.instance_id,
                    r.family,
                    r.n,
                    r.k,
                    r.budget,
                    r.algorithm,
                    r.value,
                    r.opt,
                    _frac(r.ratio),
                    f"{float(r.ratio):.6f}",
                    _frac(r.bound),
                    str(r.passed).lower(),
                    r.queries,
                    r.seed,
                    f"{r.runtime_ms:.3f}",
                ]
            )


def write_lemma_csv(report: LemmaReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "instance_id",
                "reference_kind",
                "occurred",
                "beta",
                "prefix_value",
                "reference_value",
                "bound",
                "holds",
            ]
        )
        for r in report.rows:
            w.writerow(
                [
                    r.instance_id,
                    r.reference_kind,
                    str(r.occurred).lower(),
                    _frac(r.beta),
                    "" if r.prefix_value is None else r.prefix_value,
                    "" if r.reference_value is None else r.reference_value,
                    _frac(r.bound),
                    "" if r.holds is None else str(r.holds).lower(),
                ]
            )
        w.writerow([])
        w.writerow(
            [
                "instance_id",
                "source",
                "n_padded",
                "segments",
                "midpoint_violations",
                "telescoping_ok",
                "ok",
            ]
        )
        for p in report.path_rows:
            w.writerow(
                [
                    p.instance_id,
                    p.source,
                    p.n_padded,
                    p.segments,
                    p.midpoint_violations,
                    str(p.telescoping_ok).lower(),
                    str(p.ok).lower(),
                ]
            )


def write_query_csv(report: QueryReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "k", "algorithm", "queries", "envelope", "within_envelope"])
        for r in report.rows:
            w.writerow(
                [
                    r.n,
                    r.k,
                    r.algorithm,
                    r.queries,
                    "" if r.envelope is None else r.envelope,
                    "" if r.within_envelope is None else str(r.within_envelope).lower(),
                ]
            )


def bound_csv_text(report: BoundReport, include_runtime: bool = True) -> str:
    """CSV as a string; dropping the runtime column gives the deterministic view."""
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    cols = BOUND_CSV_COLUMNS if include_runtime else BOUND_CSV_COLUMNS[:-1]
    w.writerow(cols)
    for r in report.rows:
        row = [
            r.instance_id,
            r.family,
            r.n,
            r.k,
            r.budget,
            r.algorithm,
            r.value,
            r.opt,
            _frac(r.ratio),
            f"{float(r.ratio):.6f}",
            _frac(r.bound),
            str(r.passed).lower(),
            r.queries,
            r.seed,
        ]
        if include_runtime:
            row.append(f"{r.runtime_ms:.3f}")
        w.writerow(row)
    return buf.getvalue()
