"""Shared canonical fixtures.

T1: monotone coverage instance on 3 elements, 2 dimensions, 4 unit-weight
universe points, costs (1, 2, 2), budget 3.  Small enough to enumerate by
hand but rich enough that greedy, guessing and rejections all trigger.

T2: non-monotone per-dimension cut instance on the path graph e0-e1-e2 with
unit weights and unit costs, budget 2.
"""

import pytest

from ksubmax.core import validate_instance
from ksubmax.oracles import CoverageOracle, DisjointCutOracle


def make_t1(budget=3):
    gamma = (
        (frozenset({0, 1}), frozenset({0})),
        (frozenset({1, 2}), frozenset({2, 3})),
        (frozenset({3}), frozenset({1, 2, 3})),
    )
    oracle = CoverageOracle(universe_weights=(1, 1, 1, 1), gamma=gamma, k=2)
    return validate_instance(oracle, costs=(1, 2, 2), budget=budget)


def make_t2():
    oracle = DisjointCutOracle(n=3, k=2, edges=((0, 1, 1), (1, 2, 1)))
    return validate_instance(oracle, costs=(1, 1, 1), budget=2)


@pytest.fixture
def t1():
    return make_t1()


@pytest.fixture
def t1_budget4():
    return make_t1(budget=4)


@pytest.fixture
def t2():
    return make_t2()
