"""Serialization round trips, suite behavior, CSV determinism, CLI."""

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from ksubmax.errors import SchemaError
from ksubmax.harness import (
    ExperimentConfig,
    bound_csv_text,
    build_corpus,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    run_bound_suite,
    run_lemma_suite,
    run_query_benchmark,
    save_instance,
)
from ksubmax.oracles import generate_instance

from conftest import make_t1, make_t2


class TestSerialization:
    @pytest.mark.parametrize("fixture", [make_t1, make_t2])
    def test_round_trip(self, fixture, tmp_path):
        inst = fixture()
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded == inst

    def test_tabular_round_trip(self, tmp_path):
        inst = generate_instance("tabular_rejection", seed=1, n=3, k=2)
        path = tmp_path / "tab.json"
        save_instance(inst, path)
        assert load_instance(path) == inst

    def test_wrong_table_length(self):
        d = {
            "n": 2,
            "k": 2,
            "budget": 2,
            "costs": [1, 1],
            "monotone": False,
            "oracle": {"family": "tabular", "tabular": {"values": [0, 1, 2]}},
        }
        with pytest.raises(SchemaError):
            instance_from_dict(d)

    def test_zero_cost_rejected(self, tmp_path):
        inst = make_t1()
        d = instance_to_dict(inst)
        d["costs"][0] = 0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(d))
        with pytest.raises(SchemaError):
            load_instance(path)

    def test_missing_field(self):
        with pytest.raises(SchemaError):
            instance_from_dict({"n": 2, "k": 2})

    def test_byte_identical_files(self, tmp_path):
        cfg = ExperimentConfig(count=4, seed=12, n_range=(4, 5), k_choices=(2,))
        blobs = []
        for run in range(2):
            out = tmp_path / f"run{run}"
            out.mkdir()
            for inst_id, inst in build_corpus(cfg):
                p = out / f"{inst_id}.json"
                save_instance(inst, p)
                blobs.append((run, inst_id, p.read_bytes()))
        first = {i: b for r, i, b in blobs if r == 0}
        second = {i: b for r, i, b in blobs if r == 1}
        assert first == second


class TestBoundSuite:
    def test_small_monotone_suite_passes(self):
        cfg = ExperimentConfig(
            family="coverage",
            count=12,
            seed=3,
            n_range=(4, 6),
            k_choices=(2,),
            algorithms=("one_guess_greedy", "greedy_plus_singleton", "greedy_plus"),
        )
        report = run_bound_suite(cfg)
        assert report.ok
        assert report.min_ratio["one_guess_greedy"] >= Fraction(1, 2)

    def test_small_nonmonotone_suite_passes(self):
        cfg = ExperimentConfig(
            family="nonmonotone_mix",
            count=12,
            seed=4,
            n_range=(4, 5),
            k_choices=(2,),
            algorithms=("one_guess_greedy", "greedy_plus_singleton"),
        )
        report = run_bound_suite(cfg)
        assert report.ok
        assert report.min_ratio["one_guess_greedy"] >= Fraction(1, 3)

    def test_csv_identical_across_threads(self):
        cfg = ExperimentConfig(
            family="coverage",
            count=8,
            seed=5,
            n_range=(4, 5),
            k_choices=(2,),
            algorithms=("one_guess_greedy", "greedy"),
        )
        texts = []
        for threads in (1, 3):
            report = run_bound_suite(
                ExperimentConfig(**{**cfg.__dict__, "threads": threads})
            )
            texts.append(bound_csv_text(report, include_runtime=False))
        assert texts[0] == texts[1]

    def test_budget_rule_halves(self):
        cfg = ExperimentConfig(count=6, seed=6, n_range=(5, 5), k_choices=(2,))
        corpus = build_corpus(cfg)
        # first half uses the smaller alpha, second half the larger
        small = [inst.budget / sum(inst.costs) for _, inst in corpus[:3]]
        large = [inst.budget / sum(inst.costs) for _, inst in corpus[3:]]
        assert max(small) <= min(large) + 0.2


class TestLemmaSuite:
    def test_small_suite(self):
        cfg = ExperimentConfig(
            family="coverage", count=10, seed=7, n_range=(4, 6), k_choices=(2,)
        )
        report = run_lemma_suite(cfg)
        assert report.ok
        assert any(r.occurred for r in report.rows)
        assert len(report.path_rows) > 0
        assert report.infeasible_schedules == 0

    def test_nonmonotone_suite(self):
        cfg = ExperimentConfig(
            family="disjoint_cut", count=8, seed=8, n_range=(4, 6), k_choices=(2,)
        )
        report = run_lemma_suite(cfg)
        assert report.ok


class TestQueryBenchmark:
    def test_tiny_benchmark(self):
        cfg = ExperimentConfig(seed=9, sizes=(10, 20), bench_k=2)
        report = run_query_benchmark(cfg)
        one_gg = [r for r in report.rows if r.algorithm == "one_guess_greedy"]
        assert all(r.within_envelope for r in one_gg)
        # doubling n multiplies guess count by 2 and per-guess work by ~4
        assert 6 <= report.growth["one_guess_greedy"][0] <= 10


class TestCli:
    def run_cli(self, *argv):
        return subprocess.run(
            [sys.executable, "-m", "ksubmax.cli", *argv],
            capture_output=True,
            text=True,
        )

    def test_solve_round_trip(self, tmp_path):
        inst = make_t1()
        path = tmp_path / "t1.json"
        save_instance(inst, path)
        proc = self.run_cli("solve", "--instance", str(path), "--algorithm", "one-guess-greedy")
        assert proc.returncode == 0
        out = json.loads(proc.stdout)
        assert out["value"] == 4

    def test_verify_oracle(self, tmp_path):
        inst = make_t2()
        path = tmp_path / "t2.json"
        save_instance(inst, path)
        proc = self.run_cli("verify-oracle", "--instance", str(path))
        assert proc.returncode == 0
        assert "ok" in proc.stdout

    def test_missing_instance_flag_is_usage_error(self):
        proc = self.run_cli("solve", "--algorithm", "one-guess-greedy")
        assert proc.returncode != 0
        assert proc.stderr

    def test_verify_bounds_small(self, tmp_path):
        proc = self.run_cli(
            "verify-bounds",
            "--family", "coverage",
            "--count", "4",
            "--seed", "2",
            "--n-min", "4",
            "--n-max", "5",
            "--k", "2",
            "--out", str(tmp_path),
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "bounds.csv").exists()
        assert "PASS" in proc.stdout
