"""Lattice operations, instance validation, marginal gains, query accounting."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ksubmax import core
from ksubmax.core import (
    QueryCounter,
    cost,
    join,
    marginal_density,
    marginal_gain,
    meet,
    precedes,
    subtract,
    support,
    validate_instance,
)
from ksubmax.errors import (
    AlreadyAssigned,
    BadDimension,
    EmptyFeasibleSet,
    LengthMismatch,
    NotComparable,
    ZeroCost,
)
from ksubmax.oracles import CoverageOracle

from conftest import make_t1


def _coverage(n, k, budget, costs):
    gamma = tuple(tuple(frozenset({i % 3}) for _ in range(k)) for i in range(n))
    oracle = CoverageOracle((1, 1, 1), gamma, k)
    return validate_instance(oracle, costs, budget)


class TestValidateInstance:
    def test_valid(self):
        inst = _coverage(3, 2, budget=3, costs=(1, 2, 2))
        assert inst.n == 3 and inst.k == 2 and inst.monotone

    def test_zero_cost(self):
        with pytest.raises(ZeroCost):
            _coverage(2, 2, budget=1, costs=(0, 1))

    def test_budget_below_cheapest(self):
        with pytest.raises(EmptyFeasibleSet):
            _coverage(2, 1, budget=1, costs=(2, 2))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            _coverage(2, 2, budget=2, costs=(1, 1, 1))


class TestLatticeOps:
    def test_support(self):
        assert support((0, 0, 0)) == frozenset()
        assert support((1, 0, 2)) == {0, 2}
        assert support((2, 2, 2)) == {0, 1, 2}

    def test_cost(self):
        inst = make_t1()
        assert cost((0, 0, 0), inst) == 0
        assert cost((1, 0, 2), inst) == 3
        assert cost((1, 2, 2), inst) == 5
        with pytest.raises(LengthMismatch):
            cost((0, 0), inst)

    def test_join(self):
        assert join((1,), (2,)) == (0,)
        assert join((1, 0), (0, 2)) == (1, 2)
        assert join((1, 1), (1, 0)) == (1, 1)
        with pytest.raises(LengthMismatch):
            join((1,), (1, 2))

    def test_meet(self):
        assert meet((1,), (2,)) == (0,)
        assert meet((1, 2), (1, 0)) == (1, 0)
        assert meet((2, 2), (2, 2)) == (2, 2)

    def test_precedes(self):
        assert precedes((0, 0), (1, 2))
        assert precedes((1, 0), (1, 2))
        assert not precedes((1, 0), (2, 2))

    def test_subtract(self):
        assert subtract((1, 2), (1, 0)) == (0, 2)
        assert subtract((1, 2), (0, 0)) == (1, 2)
        with pytest.raises(NotComparable):
            subtract((1, 2), (2, 0))


assignments = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )
)


class TestLatticeProperties:
    @given(assignments)
    def test_meet_precedes_both(self, xy):
        x, y = tuple(xy[0]), tuple(xy[1])
        m = meet(x, y)
        assert precedes(m, x) and precedes(m, y)

    @given(assignments)
    def test_join_with_zero_is_identity(self, xy):
        x, _ = tuple(xy[0]), None
        zero = (0,) * len(x)
        assert join(x, zero) == x
        assert meet(x, x) == x

    @given(assignments)
    def test_meet_precedes_join(self, xy):
        x, y = tuple(xy[0]), tuple(xy[1])
        assert precedes(meet(x, y), join(x, y))


class TestMarginals:
    def test_gain_on_empty(self):
        inst = make_t1()
        assert marginal_gain(inst, (0, 0, 0), 0, 1) == 2

    def test_gain_after_first(self):
        inst = make_t1()
        assert marginal_gain(inst, (1, 0, 0), 1, 2) == 2

    def test_already_assigned(self):
        inst = make_t1()
        with pytest.raises(AlreadyAssigned):
            marginal_gain(inst, (1, 0, 0), 0, 2)

    def test_bad_dimension(self):
        inst = make_t1()
        with pytest.raises(BadDimension):
            marginal_gain(inst, (0, 0, 0), 0, 3)

    def test_densities(self):
        inst = make_t1()
        assert marginal_density(inst, (0, 0, 0), 0, 1) == 2
        assert marginal_density(inst, (0, 0, 0), 2, 2) == Fraction(3, 2)
        assert marginal_density(inst, (0, 0, 0), 1, 1) == 1

    def test_cached_value_saves_a_query(self):
        inst = make_t1()
        counter = inst.oracle.counter
        before = counter.count
        marginal_gain(inst, (0, 0, 0), 0, 1)
        assert counter.count - before == 2
        before = counter.count
        marginal_gain(inst, (0, 0, 0), 0, 1, value_at_x=0)
        assert counter.count - before == 1


class TestQueryCounter:
    def test_merge_equals_sum(self):
        workers = [QueryCounter() for _ in range(4)]
        for w, m in zip(workers, (3, 5, 7, 11)):
            for _ in range(m):
                w.add()
        total = QueryCounter()
        for w in workers:
            total.merge(w)
        assert total.count == 3 + 5 + 7 + 11

    def test_bulk_add(self):
        c = QueryCounter()
        c.add(10)
        c.add()
        assert c.count == 11
