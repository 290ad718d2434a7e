import csv
import json
import math

import networkx as nx
import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from expforce.harness import (ExperimentConfig, Process, node_profiles, plan_experiment,
                              run_experiment, run_network)
from expforce.stats import UndefinedCorrelation, correlation_stderr, fisher_ci, pearson, spearman

from conftest import connected_graphs, from_nx, to_nx

vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=60)


class TestStats:
    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_against_scipy(self, data):
        x = data.draw(vectors)
        y = data.draw(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=len(x), max_size=len(x)))
        if np.ptp(x) < 1e-6 or np.ptp(y) < 1e-6:
            return
        assert pearson(x, y) == pytest.approx(scipy.stats.pearsonr(x, y)[0], abs=1e-9)
        assert spearman(x, y) == pytest.approx(scipy.stats.spearmanr(x, y)[0], abs=1e-9)

    def test_constant_is_undefined(self):
        with pytest.raises(UndefinedCorrelation):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(UndefinedCorrelation):
            spearman([1, 2, 3], [0.3, 0.3, 0.3])

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            pearson([1], [1])

    def test_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
        assert spearman([1, 2, 3], [1, 8, 27]) == pytest.approx(1.0)

    def test_stderr_and_ci(self):
        assert correlation_stderr(0.6, 102) == pytest.approx(math.sqrt(0.64 / 100))
        lo, hi = fisher_ci(0.6, 100)
        z = math.atanh(0.6)
        assert lo == pytest.approx(math.tanh(z - 1.959964 / math.sqrt(97)), abs=1e-6)
        assert lo < 0.6 < hi
        assert fisher_ci(1.0, 50)[1] <= 1.0


class TestConfig:
    def test_process_parse(self):
        assert Process.parse("sis-c") == Process("sis", "continuous")
        assert Process.parse({"model": "sir", "time_mode": "discrete"}).name == "sir-d"
        with pytest.raises(ValueError):
            Process.parse("si-d")

    @pytest.mark.parametrize("bad", [{"networks": []}, {"networks": [{"file": "x"}], "metrics": ["pagerank"]},
                                     {"networks": [{"file": "x"}], "seed_selection": "first:3"},
                                     {"networks": [{"file": "x"}], "beta_policy": "fixed"}])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(bad)

    def test_plan_full_scale(self):
        nets = [{"generator": "pareto", "count": 100}] + \
               [{"generator": "sampled", "degseq": f"net{k}.deg", "count": 100} for k in range(3)] + \
               [{"file": f"empirical{k}.txt"} for k in range(24)]
        jobs = plan_experiment(ExperimentConfig.from_dict({"networks": nets}))
        assert len(jobs) == 424
        assert len({j.id for j in jobs}) == 424
        assert [j.index for j in jobs] == list(range(424))

    def test_roundtrip(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"networks": [{"file": "a.txt"}], "rng_seed": 9, "band": [0.1, 0.9]})
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg.to_dict()))
        again = ExperimentConfig.load(p)
        assert again.rng_seed == 9 and again.band == (0.1, 0.9)


@given(connected_graphs(max_nodes=15))
@settings(max_examples=40, deadline=None)
def test_node_profiles(g):
    G = to_nx(g)
    prof = node_profiles(g)
    for v in range(g.node_count):
        d = nx.single_source_shortest_path_length(G, v, cutoff=2)
        assert prof[v, 0] == G.degree(v)
        assert prof[v, 1] == sum(G.degree(u) for u in G[v])
        assert prof[v, 2] == sum(G.degree(u) for u, k in d.items() if k == 2)


SMALL = {
    "networks": [{"generator": "pareto", "n": 200, "count": 2}],
    "metrics": ["exf", "exf_m", "kshell", "eigen"],
    "processes": ["si-c", "sis-c", "sir-d"],
    "seed_selection": "random:30",
    "sims_per_seed": 20,
    "calibration_sample": 20,
    "rng_seed": 3,
}


@pytest.fixture(scope="module")
def small_run():
    return run_experiment(ExperimentConfig.from_dict(SMALL))


class TestExperiment:
    def test_rows(self, small_run):
        assert not small_run.failures
        assert len(small_run.rows) == 2 * 4 * 3
        for r in small_run.rows:
            assert r.flag or -1 <= r.correlation <= 1
            assert r.n_seeds == 30
        assert len(small_run.agreement) == 2 * 6
        assert len(small_run.raw) == 60

    def test_manifest_records_rerun_inputs(self, small_run):
        m = small_run.manifest
        assert m["config"]["rng_seed"] == 3
        assert len(m["jobs"]) == 2
        for net in m["networks"]:
            assert 190 <= net["nodes"] <= 210
            assert net["lambda"] > 0
            assert "beta" in net["processes"]["sis-c"]
            assert "calibration" in net["processes"]["sir-d"]
        assert "numpy" in m["versions"]

    def test_reproducible(self, small_run):
        again = run_experiment(ExperimentConfig.from_dict(SMALL))
        assert [r.correlation for r in again.rows] == [r.correlation for r in small_run.rows]

    def test_single_network_matches_sweep(self, small_run):
        cfg = ExperimentConfig.from_dict(SMALL)
        res = run_network(cfg, plan_experiment(cfg)[1])
        assert [r.correlation for r in res["rows"]] == \
               [r.correlation for r in small_run.rows if r.network == res["info"]["id"]]

    def test_write(self, small_run, tmp_path):
        small_run.write(tmp_path)
        for name in ("correlations.csv", "nodes.csv", "agreement.csv", "summary.csv", "manifest.json"):
            assert (tmp_path / name).exists()
        with open(tmp_path / "summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["process"] for r in rows} == {"si-c", "sis-c", "sir-d"}
        json.loads((tmp_path / "manifest.json").read_text())

    def test_missing_file_is_a_failure_not_a_crash(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"networks": [{"file": "nope.txt"}], "processes": ["sis-c"]},
                                         base_dir=tmp_path)
        table = run_experiment(cfg)
        assert len(table.failures) == 1 and table.rows == []

    def test_multiple_policy(self, tmp_path):
        g = from_nx(nx.barabasi_albert_graph(120, 2, seed=1))
        path = tmp_path / "ba.txt"
        path.write_text("".join(f"{u} {v}\n" for u, v, _ in g.edges()))
        cfg = ExperimentConfig.from_dict({"networks": [{"file": "ba.txt"}], "processes": ["sis-c"],
                                          "beta_policy": "multiple:2", "sims_per_seed": 10,
                                          "metrics": ["exf", "kshell"]}, base_dir=tmp_path)
        table = run_experiment(cfg)
        info = table.networks[0]
        assert info["processes"]["sis-c"]["beta"] == pytest.approx(2 / info["lambda"])


class TestInvariants:
    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=40),
           st.floats(0.01, 100), st.floats(-100, 100))
    @settings(max_examples=100, deadline=None)
    def test_pearson_affine(self, x, a, b):
        if np.ptp(x) < 1e-3:
            return
        y = a * np.asarray(x) + b
        assert pearson(x, y) == pytest.approx(1.0, abs=1e-9)

    @given(st.lists(st.integers(-50, 50), min_size=3, max_size=40), st.data())
    @settings(max_examples=100, deadline=None)
    def test_spearman_monotone(self, x, data):
        # integers keep both transforms strictly increasing in floating point
        y = data.draw(st.lists(st.integers(-50, 50), min_size=len(x), max_size=len(x)))
        if len(set(x)) < 2 or len(set(y)) < 2:
            return
        fx = np.exp(np.asarray(x) / 10)
        fy = np.asarray(y, dtype=float) ** 3
        assert spearman(fx, fy) == pytest.approx(spearman(x, y), abs=1e-12)

    @pytest.mark.parametrize("G,v,expect", [(nx.star_graph(4), 0, (4, 4, 0)), (nx.star_graph(4), 1, (1, 4, 3)),
                                            (nx.path_graph(5), 2, (2, 4, 2))])
    def test_profile_fixtures(self, G, v, expect):
        assert tuple(node_profiles(from_nx(G), [v])[0]) == expect

    def test_seed_order_does_not_matter(self):
        cfg = ExperimentConfig.from_dict(SMALL)
        job = plan_experiment(cfg)[0]
        res = run_network(cfg, job)
        # shuffling the per-node rows leaves every correlation unchanged
        rows = res["raw"]
        perm = np.random.default_rng(0).permutation(len(rows))
        for r in res["rows"]:
            if r.flag:
                continue
            x = [rows[i][r.metric] for i in perm]
            y = [rows[i][r.process] for i in perm]
            assert pearson(x, y) == pytest.approx(r.correlation, abs=1e-12)

    def test_raw_row_count(self, small_run):
        assert len(small_run.raw) == len(small_run.networks) * 30
