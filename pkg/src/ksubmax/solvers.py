"""Combinatorial solvers for budgeted maximization over k-dimension assignments.

All solvers are deterministic pure functions of (instance, parameters).  The
density argmax breaks ties by smallest element index, then smallest dimension
index; the best-over-candidates reductions keep the first maximum in
enumeration order.  Value comparisons are exact (integer values, rational
densities compared by cross-multiplication), so results are independent of
evaluation grouping and worker scheduling.

Query accounting: one counted query per oracle evaluation of a full solution.
The current solution's value is carried forward, so a density scan over all
remaining (element, dimension) pairs costs one query per pair.  From an empty
start the plain greedy run needs at most k*n*(n+1)/2 + 1 queries; with one
guessed element per start this totals below 4 * n^3 * k^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import Instance, cost, support
from .errors import BadEpsilon, StartTooExpensive, TooLarge

BRUTE_FORCE_MAX_STATES = 65_536


@dataclass(frozen=True)
class Pick:
    """One argmax decision of a greedy sweep; rejected picks keep the pool shrinking."""

    element: int
    dimension: int
    gain: int
    density: Fraction
    accepted: bool


@dataclass(frozen=True)
class GreedyTrace:
    start: tuple
    picks: tuple
    final: tuple

    @property
    def accepted_picks(self) -> tuple:
        return tuple((p.element, p.dimension) for p in self.picks if p.accepted)


@dataclass(frozen=True)
class SolverResult:
    solution: tuple
    value: int
    queries: int
    trace: Optional[GreedyTrace] = None
    guess_used: Optional[tuple] = None


@dataclass(frozen=True)
class RejectionRecord:
    """Greedy state at the first budget rejection of a reference element."""

    occurred: bool
    prefix: tuple
    rejected_element: Optional[int]
    beta: Optional[Fraction]
    picks: tuple  # accepted (element, dimension) picks up to the stop point


def _greedy_sweep(inst: Instance, start, stop_reference=None):
    """Shared greedy loop.

    Runs the density-argmax iteration from `start` until the candidate pool
    empties.  With `stop_reference` set, stops right before the first budget
    rejection of an element in the reference's support and reports it.
    Returns (current, current_value, picks, rejection_info).
    """
    n, k = inst.n, inst.k
    costs, budget, oracle = inst.costs, inst.budget, inst.oracle
    cur = list(start)
    cur_cost = cost(cur, inst)
    if cur_cost > budget:
        raise StartTooExpensive(f"start costs {cur_cost} > budget {budget}")
    cur_val = oracle.evaluate(cur)
    pool = [e for e in range(n) if cur[e] == 0]
    ref_support = None if stop_reference is None else support(stop_reference)
    picks = []

    while pool:
        best_e = -1
        best_j = 0
        best_val = 0
        best_num = 0  # best density = best_num / best_den, compared by cross-multiplication
        best_den = 1
        first = True
        for e in pool:
            ce = costs[e]
            for j in range(1, k + 1):
                cur[e] = j
                val = oracle.evaluate(cur)
                cur[e] = 0
                num = val - cur_val
                if first or num * best_den > best_num * ce:
                    best_e, best_j, best_val = e, j, val
                    best_num, best_den = num, ce
                    first = False
        fits = cur_cost + best_den <= budget
        if not fits and ref_support is not None and best_e in ref_support:
            rejection = (best_e, Fraction(cur_cost, 1))
            return cur, cur_val, picks, rejection
        picks.append(
            Pick(
                element=best_e,
                dimension=best_j,
                gain=best_num,
                density=Fraction(best_num, best_den),
                accepted=fits,
            )
        )
        if fits:
            cur[best_e] = best_j
            cur_val = best_val
            cur_cost += best_den
        pool.remove(best_e)

    return cur, cur_val, picks, None


def greedy(inst: Instance, start: Optional[Sequence[int]] = None) -> SolverResult:
    """Density greedy from a feasible start.

    Each iteration assigns the maximum-density (element, dimension) pair if
    it fits the budget; the element leaves the candidate pool either way.
    """
    start = tuple(start) if start is not None else (0,) * inst.n
    before = inst.oracle.counter.count
    cur, cur_val, picks, _ = _greedy_sweep(inst, start)
    return SolverResult(
        solution=tuple(cur),
        value=cur_val,
        queries=inst.oracle.counter.count - before,
        trace=GreedyTrace(start=start, picks=tuple(picks), final=tuple(cur)),
        guess_used=None,
    )


def first_rejection_prefix(
    inst: Instance, reference: Sequence[int], start: Optional[Sequence[int]] = None
) -> RejectionRecord:
    """Replay greedy and stop at the first budget rejection of a reference element.

    The recorded prefix is the greedy solution at that moment; beta is its
    cost over the reference cost.  Without such an event the record carries
    the final greedy solution and occurred=False.
    """
    reference = tuple(reference)
    if cost(reference, inst) > inst.budget:
        raise ValueError("reference solution exceeds the budget")
    start = tuple(start) if start is not None else (0,) * inst.n
    cur, _, picks, rejection = _greedy_sweep(inst, start, stop_reference=reference)
    accepted = tuple((p.element, p.dimension) for p in picks if p.accepted)
    if rejection is None:
        return RejectionRecord(
            occurred=False, prefix=tuple(cur), rejected_element=None, beta=None, picks=accepted
        )
    rejected_e, prefix_cost = rejection
    ref_cost = cost(reference, inst)
    return RejectionRecord(
        occurred=True,
        prefix=tuple(cur),
        rejected_element=rejected_e,
        beta=Fraction(int(prefix_cost), ref_cost),
        picks=accepted,
    )


def _enumerate_guesses(inst: Instance, size: int):
    """Feasible solutions with exactly `size` assigned elements, in
    lexicographic (element indices, then dimensions) order."""
    n, k = inst.n, inst.k
    for elems in itertools.combinations(range(n), size):
        if sum(inst.costs[e] for e in elems) > inst.budget:
            continue
        for dims in itertools.product(range(1, k + 1), repeat=size):
            x = [0] * n
            for e, j in zip(elems, dims):
                x[e] = j
            yield tuple(x)


def q_guess_greedy(inst: Instance, q: int) -> SolverResult:
    """Best greedy completion over all feasible starts of exactly q elements,
    together with the best feasible solution of fewer than q elements.

    q = 0 is the plain greedy run from the empty solution.  The first
    candidate in enumeration order wins ties.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    oracle = inst.oracle
    before = oracle.counter.count
    if q == 0:
        res = greedy(inst)
        return SolverResult(
            solution=res.solution,
            value=res.value,
            queries=oracle.counter.count - before,
            trace=res.trace,
            guess_used=None,
        )

    best_sol = None
    best_val = None
    best_trace = None
    best_guess = None
    for size in range(q):
        for x in _enumerate_guesses(inst, size):
            val = oracle.evaluate(x)
            if best_val is None or val > best_val:
                best_sol, best_val, best_trace, best_guess = x, val, None, None
    for y in _enumerate_guesses(inst, q):
        res = greedy(inst, y)
        if best_val is None or res.value > best_val:
            best_sol, best_val = res.solution, res.value
            best_trace, best_guess = res.trace, y
    return SolverResult(
        solution=best_sol,
        value=best_val,
        queries=oracle.counter.count - before,
        trace=best_trace,
        guess_used=best_guess,
    )


def best_feasible_singleton(inst: Instance) -> SolverResult:
    """Highest-value single assignment that fits the budget alone."""
    oracle = inst.oracle
    before = oracle.counter.count
    best_sol = (0,) * inst.n
    best_val = 0
    for e in range(inst.n):
        if inst.costs[e] > inst.budget:
            continue
        for j in range(1, inst.k + 1):
            x = [0] * inst.n
            x[e] = j
            val = oracle.evaluate(x)
            if val > best_val:
                best_sol, best_val = tuple(x), val
    return SolverResult(
        solution=best_sol, value=best_val, queries=oracle.counter.count - before
    )


def greedy_plus_singleton(inst: Instance) -> SolverResult:
    """The better of the plain greedy solution and the best feasible singleton."""
    before = inst.oracle.counter.count
    g = greedy(inst)
    s = best_feasible_singleton(inst)
    winner = g if g.value >= s.value else s
    return SolverResult(
        solution=winner.solution,
        value=winner.value,
        queries=inst.oracle.counter.count - before,
        trace=g.trace,
    )


def greedy_plus(inst: Instance) -> SolverResult:
    """Best single-element augmentation over every prefix of the greedy run.

    Candidates are each accepted-pick prefix itself (so the result never
    falls below plain greedy) plus every feasible one-element extension of
    it (the empty prefix contributes every feasible singleton).
    """
    oracle = inst.oracle
    before = oracle.counter.count
    g = greedy(inst)

    prefix = [0] * inst.n
    prefix_cost = 0
    prefix_val = 0
    best_sol, best_val = tuple(prefix), 0
    steps = [None] + [p for p in g.trace.picks if p.accepted]
    for step in steps:
        if step is not None:
            prefix[step.element] = step.dimension
            prefix_cost += inst.costs[step.element]
            prefix_val += step.gain
        if prefix_val > best_val:
            best_sol, best_val = tuple(prefix), prefix_val
        for e in range(inst.n):
            if prefix[e] != 0 or prefix_cost + inst.costs[e] > inst.budget:
                continue
            for j in range(1, inst.k + 1):
                prefix[e] = j
                val = oracle.evaluate(prefix)
                if val > best_val:
                    best_sol, best_val = tuple(prefix), val
                prefix[e] = 0
    return SolverResult(
        solution=best_sol,
        value=best_val,
        queries=oracle.counter.count - before,
        trace=g.trace,
    )


def threshold_greedy(inst: Instance, epsilon, with_guess: bool = False) -> SolverResult:
    """Decreasing-threshold greedy: sweep a geometric density grid.

    For each start, thresholds run from the start's best feasible density
    d_max down to epsilon * d_max / n by factors of (1 - epsilon); each sweep
    adds, in lexicographic order, every pair whose current density clears the
    threshold and whose cost fits.  Queries per start grow like
    n*k*log(n/epsilon)/epsilon instead of the quadratic exact-argmax cost.
    """
    eps = Fraction(epsilon if not isinstance(epsilon, float) else str(epsilon))
    if not 0 < eps < 1:
        raise BadEpsilon(f"epsilon must be in (0, 1), got {eps}")
    oracle = inst.oracle
    before = oracle.counter.count
    n, k = inst.n, inst.k
    costs, budget = inst.costs, inst.budget

    starts = list(_enumerate_guesses(inst, 1)) if with_guess else [(0,) * n]

    best_sol = None
    best_val = None
    for start in starts:
        cur = list(start)
        cur_cost = cost(cur, inst)
        cur_val = oracle.evaluate(cur)

        d_num, d_den = 0, 1  # best feasible density at the start
        for e in range(n):
            if cur[e] != 0 or cur_cost + costs[e] > budget:
                continue
            for j in range(1, k + 1):
                cur[e] = j
                val = oracle.evaluate(cur)
                cur[e] = 0
                if (val - cur_val) * d_den > d_num * costs[e]:
                    d_num, d_den = val - cur_val, costs[e]

        if d_num > 0:
            d_max = Fraction(d_num, d_den)
            tau = d_max
            floor_tau = eps * d_max / n
            while tau >= floor_tau:
                for e in range(n):
                    if cur[e] != 0 or cur_cost + costs[e] > budget:
                        continue
                    for j in range(1, k + 1):
                        cur[e] = j
                        val = oracle.evaluate(cur)
                        gain = val - cur_val
                        if gain * tau.denominator >= tau.numerator * costs[e]:
                            cur_val = val
                            cur_cost += costs[e]
                            break
                        cur[e] = 0
                tau *= 1 - eps

        if best_val is None or cur_val > best_val:
            best_sol, best_val = tuple(cur), cur_val

    return SolverResult(
        solution=best_sol, value=best_val, queries=oracle.counter.count - before
    )


def brute_force_opt(inst: Instance) -> SolverResult:
    """Exact optimum by enumerating every feasible assignment.

    Ties go to the lexicographically smallest assignment.  Capped at
    (k+1)^n <= 65536 states.
    """
    n, k = inst.n, inst.k
    states = (k + 1) ** n
    if states > BRUTE_FORCE_MAX_STATES:
        raise TooLarge(f"{states} assignments exceed the enumeration cap")
    oracle = inst.oracle
    before = oracle.counter.count
    costs, budget = inst.costs, inst.budget
    best_sol = (0,) * n
    best_val = 0
    evaluate = oracle.evaluate
    for x in itertools.product(range(k + 1), repeat=n):
        c = 0
        for i, j in enumerate(x):
            if j:
                c += costs[i]
        if c > budget:
            continue
        val = evaluate(x)
        if val > best_val:
            best_sol, best_val = x, val
    return SolverResult(
        solution=best_sol, value=best_val, queries=oracle.counter.count - before
    )
