"""Value-oracle families, instance generation and the exhaustive certifier.

Three concrete families ship:

* CoverageOracle   - monotone weighted coverage with one point set per
                     (element, dimension) pair.
* DisjointCutOracle - non-monotone: the sum over dimensions of the graph cut
                     of each dimension's element set.  Each per-dimension cut
                     is submodular and the dimension sets are disjoint, so the
                     sum passes the certifier on every generated instance.
* TabularOracle    - explicit value table over all (k+1)^n assignments,
                     used as an exhaustive test fixture.

check_k_submodularity() certifies any oracle at small n by checking the
orthant-submodularity and pairwise-monotonicity characterization exhaustively.
Generation never releases an uncertified small instance.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from . import core
from .core import Instance, QueryCounter, validate_instance
from .errors import (
    RejectionBudgetExceeded,
    ShapeMismatch,
    TooLarge,
)

CHECKER_MAX_N = 6
CHECKER_MAX_K = 3
TABULAR_RESAMPLE_CAP = 10_000


def _check_shape(oracle, x) -> None:
    if len(x) != oracle.n:
        raise ShapeMismatch(f"assignment length {len(x)} vs oracle n = {oracle.n}")


@dataclass(eq=True)
class CoverageOracle:
    """f(x) = total weight of the universe points covered by the assignment.

    gamma[e][j-1] is the set of universe point indices element e covers when
    assigned to dimension j.  Monotone by construction.
    """

    universe_weights: tuple
    gamma: tuple
    k: int
    counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)

    family = "coverage"
    monotone = True

    def __post_init__(self):
        self.universe_weights = tuple(int(w) for w in self.universe_weights)
        u = len(self.universe_weights)
        self.gamma = tuple(
            tuple(frozenset(int(p) for p in s) for s in per_elem) for per_elem in self.gamma
        )
        for per_elem in self.gamma:
            if len(per_elem) != self.k:
                raise ShapeMismatch(f"element needs {self.k} point sets, got {len(per_elem)}")
            for s in per_elem:
                if any(p < 0 or p >= u for p in s):
                    raise ShapeMismatch("universe point index out of range")
        # masks[e][j] with j=0 empty; bit b set iff point b covered
        self._masks = [
            [0] + [sum(1 << p for p in s) for s in per_elem] for per_elem in self.gamma
        ]
        self._unit = all(w == 1 for w in self.universe_weights)

    @property
    def n(self) -> int:
        return len(self.gamma)

    def evaluate(self, x: Sequence[int]) -> int:
        _check_shape(self, x)
        self.counter.count += 1
        m = 0
        masks = self._masks
        for e, j in enumerate(x):
            if j:
                m |= masks[e][j]
        if self._unit:
            return m.bit_count()
        w = 0
        weights = self.universe_weights
        while m:
            b = m & -m
            w += weights[b.bit_length() - 1]
            m ^= b
        return w

    def evaluate_batch(self, digits: np.ndarray) -> np.ndarray:
        u = len(self.universe_weights)
        if u > 63:
            return _batch_fallback(self, digits)
        self.counter.add(len(digits))
        table = np.asarray(self._masks, dtype=np.int64)
        masks = table[np.arange(self.n)[None, :], digits]
        covered = np.bitwise_or.reduce(masks, axis=1)
        vals = np.zeros(len(digits), dtype=np.int64)
        for b, w in enumerate(self.universe_weights):
            vals += w * ((covered >> b) & 1)
        return vals


@dataclass(eq=True)
class DisjointCutOracle:
    """f(x) = sum over dimensions j of cut(X_j) in a weighted graph.

    Generally non-monotone: assigning an element whose neighbors share its
    dimension removes cut edges.  Needs k >= 2 inside instances.
    """

    n: int
    k: int
    edges: tuple  # of (u, v, weight)
    counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)

    family = "disjoint_cut"
    monotone = False

    def __post_init__(self):
        self.edges = tuple((int(u), int(v), int(w)) for u, v, w in self.edges)
        for u, v, w in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise ShapeMismatch(f"bad edge ({u}, {v})")
            if w < 1:
                raise ShapeMismatch("edge weights must be >= 1")

    def evaluate(self, x: Sequence[int]) -> int:
        _check_shape(self, x)
        self.counter.count += 1
        total = 0
        for u, v, w in self.edges:
            ju, jv = x[u], x[v]
            if ju and ju != jv:
                total += w
            if jv and jv != ju:
                total += w
        return total

    def evaluate_batch(self, digits: np.ndarray) -> np.ndarray:
        self.counter.add(len(digits))
        vals = np.zeros(len(digits), dtype=np.int64)
        for u, v, w in self.edges:
            ju, jv = digits[:, u], digits[:, v]
            vals += w * (((ju != 0) & (ju != jv)).astype(np.int64))
            vals += w * (((jv != 0) & (jv != ju)).astype(np.int64))
        return vals


@dataclass(eq=True)
class TabularOracle:
    """Explicit table over all (k+1)^n assignments.

    Index is mixed-radix base (k+1) with element 0 as the least significant
    digit.  The all-zero entry must be 0; monotonicity is detected by an
    exhaustive scan at construction.
    """

    n: int
    k: int
    values: tuple
    counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)

    family = "tabular"

    def __post_init__(self):
        if self.n > 12:
            raise TooLarge(f"tabular oracle capped at n <= 12, got {self.n}")
        size = (self.k + 1) ** self.n
        self.values = tuple(int(v) for v in self.values)
        if len(self.values) != size:
            raise ShapeMismatch(f"table length {len(self.values)}, expected {size}")
        if self.values[0] != 0:
            raise ShapeMismatch("value at the all-unassigned solution must be 0")
        self._powers = tuple((self.k + 1) ** e for e in range(self.n))
        self.monotone = self._scan_monotone()

    def _scan_monotone(self) -> bool:
        vals = np.asarray(self.values, dtype=np.int64).reshape((self.k + 1,) * self.n)
        for e in range(self.n):
            axis = self.n - 1 - e  # row-major reshape puts element 0 on the last axis
            base = np.take(vals, 0, axis=axis)
            for j in range(1, self.k + 1):
                if np.any(np.take(vals, j, axis=axis) < base):
                    return False
        return True

    def index_of(self, x: Sequence[int]) -> int:
        return sum(j * p for j, p in zip(x, self._powers))

    def evaluate(self, x: Sequence[int]) -> int:
        _check_shape(self, x)
        self.counter.count += 1
        return self.values[sum(j * p for j, p in zip(x, self._powers))]

    def evaluate_batch(self, digits: np.ndarray) -> np.ndarray:
        self.counter.add(len(digits))
        powers = np.asarray(self._powers, dtype=np.int64)
        idx = digits @ powers
        return np.asarray(self.values, dtype=np.int64)[idx]


class ContractedOracle:
    """The function after committing to an anchor: g(x) = f(x joined with anchor) - f(anchor).

    Lives on the same index space; inputs must leave the anchor's support
    unassigned.  Shares the base oracle's query counter, since every
    evaluation is one base query (the anchor value is cached).
    """

    family = "contracted"

    def __init__(self, base: Any, anchor: Sequence[int]):
        _check_shape(base, anchor)
        self.base = base
        self.anchor = tuple(anchor)
        self.n = base.n
        self.k = base.k
        self.monotone = base.monotone
        self.anchor_value = base.evaluate(anchor)

    @property
    def counter(self) -> QueryCounter:
        return self.base.counter

    def _joined(self, x: Sequence[int]) -> list:
        joined = list(self.anchor)
        for e, j in enumerate(x):
            if j:
                if joined[e]:
                    raise ShapeMismatch(f"element {e} overlaps the anchor support")
                joined[e] = j
        return joined

    def evaluate(self, x: Sequence[int]) -> int:
        _check_shape(self, x)
        return self.base.evaluate(self._joined(x)) - self.anchor_value

    def evaluate_batch(self, digits: np.ndarray) -> np.ndarray:
        anchor = np.asarray(self.anchor, dtype=digits.dtype)
        sup = anchor != 0
        if np.any(digits[:, sup] != 0):
            raise ShapeMismatch("batch assigns elements inside the anchor support")
        joined = digits.copy()
        joined[:, sup] = anchor[sup]
        return self.base.evaluate_batch(joined) - self.anchor_value

    def __eq__(self, other):
        return (
            isinstance(other, ContractedOracle)
            and self.base == other.base
            and self.anchor == other.anchor
        )


def contract(oracle: Any, anchor: Sequence[int]) -> ContractedOracle:
    """Commit to a partial solution; the result is again k-submodular."""
    if isinstance(oracle, ContractedOracle):
        # compose: contracting twice equals contracting on the joined anchor
        return ContractedOracle(oracle.base, oracle._joined(anchor))
    return ContractedOracle(oracle, anchor)


def full_value_table(oracle: Any) -> np.ndarray:
    """All oracle values as an array of shape (k+1,) * n (element 0 = first axis).

    Counts one query per table entry.
    """
    n, k = oracle.n, oracle.k
    size = (k + 1) ** n
    digits = np.indices((k + 1,) * n).reshape(n, size).T  # column e = element e
    if hasattr(oracle, "evaluate_batch"):
        flat = oracle.evaluate_batch(np.ascontiguousarray(digits))
    else:
        flat = np.fromiter((oracle.evaluate(row) for row in digits.tolist()), dtype=np.int64)
    return flat.reshape((k + 1,) * n)


@dataclass
class CheckReport:
    """Outcome of the exhaustive k-submodularity certification."""

    ok: bool
    condition: Optional[str] = None  # "orthant_submodularity" | "pairwise_monotonicity"
    witness: Optional[dict] = None

    def __bool__(self) -> bool:
        return self.ok


def _unravel(flat: int, shape: tuple) -> list:
    return [int(d) for d in np.unravel_index(flat, shape)]


def check_k_submodularity(oracle: Any, n: Optional[int] = None, k: Optional[int] = None) -> CheckReport:
    """Certify orthant submodularity and pairwise monotonicity exhaustively.

    Orthant submodularity is checked on covering pairs (y = x plus one
    element), which implies the property on all comparable pairs by chaining.
    A counterexample names the violated condition and the witnessing tuple.
    """
    n = oracle.n if n is None else n
    k = oracle.k if k is None else k
    if n != oracle.n or k != oracle.k:
        raise ShapeMismatch("n/k override must match the oracle")
    if n > CHECKER_MAX_N or k > CHECKER_MAX_K:
        raise TooLarge(f"checker capped at n <= {CHECKER_MAX_N}, k <= {CHECKER_MAX_K}")

    vals = full_value_table(oracle)

    # gains[e][j] over the sub-lattice where e is unassigned
    gains = {}
    for e in range(n):
        base = np.take(vals, 0, axis=e)
        gains[e] = {j: np.take(vals, j, axis=e) - base for j in range(1, k + 1)}

    sub_shape = (k + 1,) * (n - 1) if n > 1 else ()

    def rebuild(rest: list, e: int, extra: Optional[tuple] = None) -> tuple:
        x = rest[:e] + [0] + rest[e:]
        if extra is not None:
            x[extra[0]] = extra[1]
        return tuple(x)

    for e in range(n):
        for j in range(1, k + 1):
            g = gains[e][j]
            # orthant submodularity against each covering extension (e2, j2)
            for e2 in range(n):
                if e2 == e:
                    continue
                ax = e2 if e2 < e else e2 - 1
                at_zero = np.take(g, 0, axis=ax)
                for j2 in range(1, k + 1):
                    diff = at_zero - np.take(g, j2, axis=ax)
                    bad = diff < 0
                    if np.any(bad):
                        flat = int(np.argmax(bad))
                        rest_shape = bad.shape
                        rest = _unravel(flat, rest_shape)
                        rest_full = rest[:ax] + [0] + rest[ax:] if n > 1 else []
                        x = rebuild(rest_full, e)
                        y = rebuild(rest_full, e, extra=(e2, j2))
                        return CheckReport(
                            ok=False,
                            condition="orthant_submodularity",
                            witness={
                                "x": x,
                                "y": y,
                                "element": e,
                                "dimension": j,
                                "gain_at_x": int(gains[e][j][tuple(rest_full)]),
                                "gain_at_y": int(
                                    gains[e][j][tuple(y[:e] + y[e + 1 :])]
                                ),
                            },
                        )
            # pairwise monotonicity
            for j2 in range(j + 1, k + 1):
                s = g + gains[e][j2]
                bad = s < 0
                if np.any(bad):
                    flat = int(np.argmax(bad))
                    rest = _unravel(flat, sub_shape) if n > 1 else []
                    x = rebuild(rest, e)
                    return CheckReport(
                        ok=False,
                        condition="pairwise_monotonicity",
                        witness={
                            "x": x,
                            "element": e,
                            "dimensions": (j, j2),
                            "gain_sum": int(s.reshape(-1)[flat]),
                        },
                    )
    return CheckReport(ok=True)


def extend_with_null_elements(inst: Instance, extra_costs: Sequence[int]) -> Instance:
    """Append elements that never change the value, keeping the family real.

    Coverage gets empty point sets, cut graphs get isolated vertices, tables
    are extended by copy.  Used to equalize costs before building
    transformation paths.
    """
    m = len(extra_costs)
    if m == 0:
        return inst
    orc = inst.oracle
    if isinstance(orc, CoverageOracle):
        empty = tuple(frozenset() for _ in range(inst.k))
        new = CoverageOracle(orc.universe_weights, orc.gamma + (empty,) * m, orc.k)
    elif isinstance(orc, DisjointCutOracle):
        new = DisjointCutOracle(orc.n + m, orc.k, orc.edges)
    elif isinstance(orc, TabularOracle):
        reps = (orc.k + 1) ** m
        new = TabularOracle(orc.n + m, orc.k, orc.values * reps)
    else:
        raise ShapeMismatch(f"cannot extend oracle family {getattr(orc, 'family', '?')}")
    return validate_instance(new, inst.costs + tuple(int(c) for c in extra_costs), inst.budget)


# ---------------------------------------------------------------------------
# instance generation


def _budget_from(costs, alpha) -> int:
    b = math.ceil(sum(costs) * alpha)
    return max(int(b), min(costs))


def _draw_costs(rng, n, cost_range, unit_costs):
    if unit_costs:
        return [1] * n
    lo, hi = cost_range
    return [rng.randint(lo, hi) for _ in range(n)]


def _gen_coverage(rng, n, k, universe, density, cost_range, unit_costs, budget_alpha):
    gamma = []
    for _ in range(n):
        per = []
        for _ in range(k):
            per.append(frozenset(p for p in range(universe) if rng.random() < density))
        gamma.append(tuple(per))
    if all(not s for per in gamma for s in per):
        e, j, p = rng.randrange(n), rng.randrange(k), rng.randrange(universe)
        per = list(gamma[e])
        per[j] = frozenset({p})
        gamma[e] = tuple(per)
    oracle = CoverageOracle((1,) * universe, tuple(gamma), k)
    costs = _draw_costs(rng, n, cost_range, unit_costs)
    return validate_instance(oracle, costs, _budget_from(costs, budget_alpha))


def _gen_disjoint_cut(rng, n, k, edge_density, weight_range, cost_range, unit_costs, budget_alpha):
    lo, hi = weight_range
    edges = [
        (u, v, rng.randint(lo, hi))
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < edge_density
    ]
    if not edges:
        u = rng.randrange(n)
        v = (u + 1 + rng.randrange(n - 1)) % n
        edges = [(min(u, v), max(u, v), rng.randint(lo, hi))]
    oracle = DisjointCutOracle(n, k, tuple(edges))
    costs = _draw_costs(rng, n, cost_range, unit_costs)
    return validate_instance(oracle, costs, _budget_from(costs, budget_alpha))


def _propose_table(rng, n, k):
    """One structured random candidate: concave support bonus + per-element
    dimension payoffs + a random cut term, with one payoff forced negative
    enough to break monotonicity at full support."""
    increments = sorted((rng.randint(1, 4) for _ in range(n)), reverse=True)
    g_min = increments[-1]
    bonus = [0]
    for inc in increments:
        bonus.append(bonus[-1] + inc)

    def draw_row():
        return [rng.randint(-g_min, 4) for _ in range(k)]

    def row_ok(row):
        if k == 1:
            return True
        return all(
            row[a] + row[b] >= -2 * g_min for a in range(k) for b in range(k) if a != b
        )

    payoff = []
    for _ in range(n):
        row = draw_row()
        while not row_ok(row):
            row = draw_row()
        payoff.append(row)
    # force a strictly negative last-level marginal on an element kept out of
    # the cut graph, so a decreasing covering pair exists
    neg_e = rng.randrange(n)
    neg_j = rng.randrange(k)
    drop = g_min + rng.randint(1, 2)
    payoff[neg_e][neg_j] = -drop
    for j2 in range(k):
        if j2 != neg_j and payoff[neg_e][neg_j] + payoff[neg_e][j2] < -2 * g_min:
            payoff[neg_e][j2] = rng.randint(drop - 2 * g_min, 4)

    others = [e for e in range(n) if e != neg_e]
    edges = [
        (u, v, rng.randint(1, 2))
        for u in others
        for v in others
        if u < v and rng.random() < 0.4
    ]

    def cut_term(assign):
        t = 0
        for u, v, w in edges:
            ju, jv = assign[u], assign[v]
            if ju and ju != jv:
                t += w
            if jv and jv != ju:
                t += w
        return t

    values = []
    for x in itertools.product(range(k + 1), repeat=n):
        # product varies the last position fastest; reversing makes element 0
        # the least significant digit of the table index
        assign = x[::-1]
        m = sum(1 for j in assign if j)
        if m == 0:
            values.append(0)
            continue
        v = bonus[m] + cut_term(assign)
        for e, j in enumerate(assign):
            if j:
                v += payoff[e][j - 1]
        values.append(v)
    return values


def _gen_tabular(rng, n, k, cost_range, unit_costs, budget_alpha):
    if n > 5 or k > 3:
        raise TooLarge("tabular generation capped at n <= 5, k <= 3")
    for _ in range(TABULAR_RESAMPLE_CAP):
        values = _propose_table(rng, n, k)
        if min(values) < 0:
            continue
        oracle = TabularOracle(n, k, tuple(values))
        if oracle.monotone:
            continue
        if not check_k_submodularity(oracle).ok:
            continue
        costs = _draw_costs(rng, n, cost_range, unit_costs)
        return validate_instance(oracle, costs, _budget_from(costs, budget_alpha))
    raise RejectionBudgetExceeded(
        f"no certified non-monotone table within {TABULAR_RESAMPLE_CAP} resamples"
    )


def generate_instance(family: str, seed, **params) -> Instance:
    """Deterministically generate a certified instance of the given family.

    Every generated instance with n <= 6 is run through the certifier before
    release.  Supported families: coverage, disjoint_cut, tabular_rejection.
    """
    rng = random.Random(f"{family}:{seed}")
    n = params.get("n", 6)
    k = params.get("k", 2)
    cost_range = params.get("cost_range", (1, 5))
    unit_costs = params.get("unit_costs", False)
    budget_alpha = Fraction(params.get("budget_alpha", Fraction(1, 2)))

    if family == "coverage":
        inst = _gen_coverage(
            rng,
            n,
            k,
            params.get("universe", 2 * n),
            params.get("density", 0.3),
            cost_range,
            unit_costs,
            budget_alpha,
        )
    elif family == "disjoint_cut":
        inst = _gen_disjoint_cut(
            rng,
            n,
            k,
            params.get("edge_density", 0.5),
            params.get("weight_range", (1, 3)),
            cost_range,
            unit_costs,
            budget_alpha,
        )
    elif family == "tabular_rejection":
        inst = _gen_tabular(rng, n, k, cost_range, unit_costs, budget_alpha)
    else:
        raise ValueError(f"unknown family {family!r}")

    if inst.n <= CHECKER_MAX_N and inst.k <= CHECKER_MAX_K:
        report = check_k_submodularity(inst.oracle)
        if not report.ok:
            raise AssertionError(f"generator produced an uncertified instance: {report}")
    return inst
