"""Exact extension evaluation, Monte Carlo, property checks and paths."""

import itertools
from fractions import Fraction

import pytest

from ksubmax.core import validate_instance
from ksubmax.errors import CostMismatch, TooLarge
from ksubmax.multilinear import (
    FractionalPoint,
    build_path,
    check_extension_properties,
    eval_exact,
    eval_mc,
    partial_exact,
    verify_path,
)
from ksubmax.oracles import (
    TabularOracle,
    extend_with_null_elements,
    generate_instance,
)
from ksubmax.solvers import first_rejection_prefix, greedy

from conftest import make_t1, make_t2


def point(n, k, entries):
    rows = [[Fraction(0)] * k for _ in range(n)]
    for (i, j), v in entries.items():
        rows[i][j - 1] = Fraction(v)
    return FractionalPoint(tuple(tuple(r) for r in rows))


class TestEvalExact:
    def test_integral_points_match_oracle(self, t1):
        for x in itertools.product(range(3), repeat=3):
            p = FractionalPoint.from_solution(x, 2)
            assert eval_exact(t1, p) == t1.oracle.evaluate(x)

    def test_half_singleton(self, t1):
        p = point(3, 2, {(0, 1): Fraction(1, 2)})
        assert eval_exact(t1, p) == 1

    def test_two_halves(self, t1):
        p = point(3, 2, {(0, 1): Fraction(1, 2), (1, 2): Fraction(1, 2)})
        assert eval_exact(t1, p) == 2

    def test_row_sum_validation(self):
        with pytest.raises(ValueError):
            point(2, 2, {(0, 1): Fraction(3, 4), (0, 2): Fraction(1, 2)})

    def test_too_large(self):
        inst = generate_instance("coverage", seed=0, n=13, k=2)
        with pytest.raises(TooLarge):
            eval_exact(inst, FractionalPoint.zeros(13, 2))


class TestPartialExact:
    def test_all_zero_point_gives_singleton_values(self, t1):
        p = FractionalPoint.zeros(3, 2)
        for i in range(3):
            for j in (1, 2):
                x = [0, 0, 0]
                x[i] = j
                assert partial_exact(t1, p, i, j) == t1.oracle.evaluate(x)

    def test_conditional_difference(self, t1):
        p = point(3, 2, {(0, 1): 1})
        assert partial_exact(t1, p, 1, 2) == 2

    def test_row_invariance(self, t1):
        base = point(3, 2, {(0, 1): Fraction(1, 3), (1, 2): Fraction(1, 2)})
        moved = base.with_entry(1, 2, Fraction(7, 8))
        for j in (1, 2):
            assert partial_exact(t1, base, 1, j) == partial_exact(t1, moved, 1, j)

    def test_reconstruction_identity(self, t1, t2):
        for inst in (t1, t2):
            p = point(
                inst.n,
                inst.k,
                {(0, 1): Fraction(1, 4), (1, 2): Fraction(2, 5), (2, 1): Fraction(1, 3)},
            )
            full = eval_exact(inst, p)
            for i in range(inst.n):
                zeroed = p
                for j in range(1, inst.k + 1):
                    zeroed = zeroed.with_entry(i, j, 0)
                recon = eval_exact(inst, zeroed) + sum(
                    p.probs[i][j - 1] * partial_exact(inst, p, i, j)
                    for j in range(1, inst.k + 1)
                )
                assert recon == full


class TestEvalMC:
    def test_integral_exact(self, t1):
        p = FractionalPoint.from_solution((1, 2, 0), 2)
        est, err = eval_mc(t1, p, samples=500, seed=11)
        assert est == 4 and err == 0.0

    def test_deterministic_in_seed(self, t1):
        p = point(3, 2, {(0, 1): Fraction(1, 2), (1, 2): Fraction(1, 2)})
        a = eval_mc(t1, p, samples=4000, seed=5)
        b = eval_mc(t1, p, samples=4000, seed=5)
        c = eval_mc(t1, p, samples=4000, seed=6)
        assert a == b
        assert a != c

    def test_within_four_stderr(self, t1):
        p = point(3, 2, {(0, 1): Fraction(1, 2), (1, 2): Fraction(1, 2)})
        est, err = eval_mc(t1, p, samples=40_000, seed=17)
        assert err > 0
        assert abs(float(est) - 2.0) <= 4 * err

    def test_single_sample(self, t1):
        p = point(3, 2, {(0, 1): Fraction(1, 2)})
        est, err = eval_mc(t1, p, samples=1, seed=3)
        assert err == 0.0
        assert est in (0, 2)

    def test_counts_one_query_per_sample(self, t1):
        before = t1.oracle.counter.count
        eval_mc(t1, FractionalPoint.zeros(3, 2), samples=1234, seed=0)
        assert t1.oracle.counter.count - before == 1234


class TestExtensionProperties:
    def test_t1_clean(self, t1):
        report = check_extension_properties(t1, points=50, seed=1)
        assert report.ok
        assert report.monotone_checked
        assert report.checks["monotone"] > 0

    def test_t2_clean_nonmonotone(self, t2):
        report = check_extension_properties(t2, points=50, seed=2)
        assert report.ok
        assert not report.monotone_checked
        assert report.checks["monotone"] == 0
        assert report.checks["pairwise"] > 0 and report.checks["hessian"] > 0

    def test_corrupted_table_flagged(self):
        base = generate_instance("tabular_rejection", seed=5, n=3, k=2)
        values = list(base.oracle.values)
        idx = base.oracle.index_of((1, 1, 0))
        values[idx] += 1000
        bad_oracle = TabularOracle(n=3, k=2, values=tuple(values))
        bad = validate_instance(bad_oracle, base.costs, base.budget)
        report = check_extension_properties(bad, points=30, seed=4)
        assert not report.ok
        assert len(report.violations) >= 1


class TestBuildPath:
    def test_identity_path_is_constant(self, t1):
        path = build_path(t1, (1, 2, 0), ((0, 1), (1, 2)))
        assert path.total_time == 3
        for seg in path.segments:
            assert eval_exact(t1, path.x_at(seg.midpoint)) == 4
        assert path.x_at(0).probs == FractionalPoint.from_solution((1, 2, 0), 2).probs
        assert path.x_at(3).probs == FractionalPoint.from_solution((1, 2, 0), 2).probs

    def test_padded_schedule(self, t1):
        ext = extend_with_null_elements(t1, (1,))
        path = build_path(ext, (0, 2, 2, 0), ((0, 1), (1, 2), (3, 1)))
        assert path.total_time == 4
        assert path.breakpoints == (0, 1, 3, 4)
        # endpoints are the reference and the traced solution
        assert path.x_at(0).probs == FractionalPoint.from_solution((0, 2, 2, 0), 2).probs
        assert path.x_at(4).probs == FractionalPoint.from_solution((1, 2, 0, 1), 2).probs
        # the shared element falls exactly in its rise slot
        y = path.y_at(2)
        assert y.probs[1][1] == Fraction(1, 2)

    def test_cost_mismatch(self, t1):
        with pytest.raises(CostMismatch):
            build_path(t1, (0, 2, 2), ((0, 1), (1, 2)))

    def test_x_stays_in_domain(self, t1):
        ext = extend_with_null_elements(t1, (1,))
        path = build_path(ext, (0, 2, 2, 0), ((0, 1), (1, 2), (3, 1)))
        for t in [Fraction(1, 3), 1, Fraction(3, 2), Fraction(7, 2), 4]:
            x = path.x_at(t)
            for i in range(4):
                assert x.row_sum(i) <= 1

    def test_y_precedes_x_one_coordinate(self, t1):
        ext = extend_with_null_elements(t1, (1,))
        path = build_path(ext, (0, 2, 2, 0), ((0, 1), (1, 2), (3, 1)))
        for seg in path.segments:
            m = seg.midpoint
            x, y = path.x_at(m), path.y_at(m)
            diffs = [
                (i, j)
                for i in range(4)
                for j in range(2)
                if x.probs[i][j] != y.probs[i][j]
            ]
            assert len(diffs) <= 1
            for i in range(4):
                for j in range(2):
                    assert y.probs[i][j] <= x.probs[i][j]


class TestVerifyPath:
    def test_identity_path_ok(self, t1):
        path = build_path(t1, (1, 2, 0), ((0, 1), (1, 2)))
        report = verify_path(t1, path)
        assert report.ok
        assert report.telescoped == 0 == report.value_gap
        for check in report.segment_checks:
            assert check.rate_x == 0

    def test_t1_padded_example(self, t1):
        ext = extend_with_null_elements(t1, (1,))
        path = build_path(ext, (0, 2, 2, 0), ((0, 1), (1, 2), (3, 1)))
        report = verify_path(ext, path)
        assert report.ok
        assert report.value_gap == 4 - 3
        assert report.telescoped == 1

    def test_t2_nonmonotone_path(self, t2):
        res = greedy(t2)
        assert res.solution == (2, 1, 0)
        path = build_path(t2, (1, 2, 0), res.trace.accepted_picks)
        report = verify_path(t2, path)
        assert not report.monotone
        assert report.ok
        assert report.value_gap == 0

    def test_rejection_prefix_path_with_reference_padding(self):
        # budget 4 lets greedy reach cost 3 before rejecting element 2, which
        # sits in the reference (0,0,2) of cost 2; pad the reference up to the
        # prefix cost and verify the schedule
        inst = make_t1(budget=4)
        rec = first_rejection_prefix(inst, (0, 0, 2))
        assert rec.occurred and rec.rejected_element == 2
        assert rec.prefix == (1, 2, 0) and rec.beta == Fraction(3, 2)
        deficit = 3 - 2
        ext = extend_with_null_elements(inst, (deficit,))
        o_padded = (0, 0, 2, 1)
        path = build_path(ext, o_padded, rec.picks)
        report = verify_path(ext, path)
        assert report.ok
        assert report.value_gap == 4 - 3
