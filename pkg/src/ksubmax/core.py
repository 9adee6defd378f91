"""Core domain types for assignments of elements to k disjoint dimensions.

A solution over a ground set of n elements is a flat tuple of length n with
entries in {0, 1, ..., k}: entry i holds the dimension of element i, with 0
meaning unassigned.  The flat representation gives O(1) element lookup in
solver inner loops; the k-subset view is reconstructed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .errors import (
    AlreadyAssigned,
    BadDimension,
    EmptyFeasibleSet,
    LengthMismatch,
    NotComparable,
    ZeroCost,
)

Solution = tuple  # length-n tuple over {0, ..., k}


def check_solution(x: Sequence[int], n: int, k: int) -> None:
    """Validate length and entry range of an assignment vector."""
    if len(x) != n:
        raise LengthMismatch(f"assignment has length {len(x)}, expected {n}")
    for i, j in enumerate(x):
        if not 0 <= j <= k:
            raise BadDimension(f"entry {j} at element {i} outside 0..{k}")


def support(x: Sequence[int]) -> frozenset:
    """Indices of assigned elements."""
    return frozenset(i for i, j in enumerate(x) if j != 0)


def subset_view(x: Sequence[int], k: int) -> list:
    """The k disjoint element sets (X_1, ..., X_k) encoded by the vector."""
    sets = [set() for _ in range(k)]
    for i, j in enumerate(x):
        if j != 0:
            sets[j - 1].add(i)
    return [frozenset(s) for s in sets]


def join(x: Sequence[int], y: Sequence[int]) -> Solution:
    """Componentwise union; elements with conflicting dimensions cancel to 0."""
    if len(x) != len(y):
        raise LengthMismatch(f"join of lengths {len(x)} and {len(y)}")
    out = []
    for a, b in zip(x, y):
        if a == b or b == 0:
            out.append(a)
        elif a == 0:
            out.append(b)
        else:
            out.append(0)
    return tuple(out)


def meet(x: Sequence[int], y: Sequence[int]) -> Solution:
    """Componentwise intersection: keep an assignment only where both agree."""
    if len(x) != len(y):
        raise LengthMismatch(f"meet of lengths {len(x)} and {len(y)}")
    return tuple(a if a == b else 0 for a, b in zip(x, y))


def precedes(x: Sequence[int], y: Sequence[int]) -> bool:
    """True iff every assigned element of x has the same dimension in y."""
    if len(x) != len(y):
        raise LengthMismatch(f"comparison of lengths {len(x)} and {len(y)}")
    return all(a == 0 or a == b for a, b in zip(x, y))


def subtract(y: Sequence[int], x: Sequence[int]) -> Solution:
    """Elements of y outside supp(x), keeping y's dimensions.  Requires x to precede y."""
    if not precedes(x, y):
        raise NotComparable("subtract requires the second argument to precede the first")
    return tuple(0 if xa != 0 else ya for xa, ya in zip(x, y))


@dataclass
class QueryCounter:
    """Counts value-oracle evaluations of full solutions.

    Concurrent solver fan-out gives each worker a private counter and merges
    at the end, so final totals are independent of scheduling.
    """

    count: int = 0

    def add(self, m: int = 1) -> None:
        self.count += m

    def merge(self, other: "QueryCounter") -> None:
        self.count += other.count


@dataclass(frozen=True)
class Instance:
    """A budgeted maximization instance over a value oracle.

    costs are positive integers (zero-cost elements are rejected: densities
    and per-element transformation rates divide by c(e)).
    """

    n: int
    k: int
    costs: tuple
    budget: int
    oracle: Any
    monotone: bool
    family: str

    @property
    def total_cost(self) -> int:
        return sum(self.costs)


def validate_instance(oracle: Any, costs: Sequence[int], budget: int) -> Instance:
    """Check instance invariants and build an immutable Instance.

    Raises ZeroCost, EmptyFeasibleSet, BadDimension or LengthMismatch on the
    corresponding violation.
    """
    n, k = oracle.n, oracle.k
    if k < 1:
        raise BadDimension(f"k = {k} < 1")
    if len(costs) != n:
        raise LengthMismatch(f"{len(costs)} costs for {n} elements")
    for i, c in enumerate(costs):
        if int(c) != c or c < 1:
            raise ZeroCost(f"cost {c} at element {i}; costs must be integers >= 1")
    if budget < min(costs):
        raise EmptyFeasibleSet(f"budget {budget} below cheapest element {min(costs)}")
    if not oracle.monotone and k < 2:
        raise BadDimension("non-monotone families need k >= 2 for a nonnegative best marginal")
    return Instance(
        n=n,
        k=k,
        costs=tuple(int(c) for c in costs),
        budget=int(budget),
        oracle=oracle,
        monotone=bool(oracle.monotone),
        family=getattr(oracle, "family", "unknown"),
    )


def cost(x: Sequence[int], inst: Instance) -> int:
    """Total cost of the assigned elements."""
    if len(x) != inst.n:
        raise LengthMismatch(f"assignment length {len(x)} vs instance n = {inst.n}")
    costs = inst.costs
    return sum(costs[i] for i, j in enumerate(x) if j != 0)


def marginal_gain(inst: Instance, x: Sequence[int], e: int, j: int, value_at_x=None):
    """Gain of assigning element e to dimension j on top of x.

    Costs two counted oracle queries, or one when value_at_x is supplied.
    """
    if not 1 <= j <= inst.k:
        raise BadDimension(f"dimension {j} outside 1..{inst.k}")
    if x[e] != 0:
        raise AlreadyAssigned(f"element {e} already assigned to {x[e]}")
    if value_at_x is None:
        value_at_x = inst.oracle.evaluate(x)
    y = list(x)
    y[e] = j
    return inst.oracle.evaluate(y) - value_at_x


def marginal_density(inst: Instance, x: Sequence[int], e: int, j: int, value_at_x=None) -> Fraction:
    """Marginal gain divided by element cost, as an exact rational."""
    return Fraction(marginal_gain(inst, x, e, j, value_at_x), inst.costs[e])
