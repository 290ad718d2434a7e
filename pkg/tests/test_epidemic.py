import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expforce.epidemic import (SimParams, beta_from_multiple, calibrate_beta, epidemic_potential,
                               epidemic_potentials, fit_gamma, half_threshold, run_batch,
                               simulate_recovery_continuous, simulate_recovery_discrete,
                               simulate_si_continuous, stream_seeds, transmission_probability,
                               tthc_outcomes)
from expforce.graph import Graph, largest_eigenvalue

from conftest import complete, connected_graphs, from_nx, path, star


def mc_close(samples, expect, k=4.0):
    s = np.asarray(samples, dtype=float)
    se = s.std(ddof=1) / math.sqrt(len(s))
    assert abs(s.mean() - expect) <= k * se, (s.mean(), expect, se)


def proportion_close(p_hat, p, n, k=4.0):
    assert abs(p_hat - p) <= k * math.sqrt(p * (1 - p) / n), (p_hat, p)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimParams("seir")
        with pytest.raises(ValueError):
            SimParams("si", "discrete")
        with pytest.raises(ValueError):
            SimParams("sis", "discrete", beta=1.0)
        with pytest.raises(ValueError):
            SimParams("sir", beta=0.0)
        with pytest.raises(ValueError):
            SimParams(n_sims=0)

    def test_threshold(self):
        assert [half_threshold(n) for n in (1, 2, 3, 1000, 1001)] == [1, 1, 2, 500, 501]

    def test_transmission_probability(self):
        assert transmission_probability(0.5) == pytest.approx(math.log(2))
        assert transmission_probability(0.9) == 1.0
        with pytest.raises(ValueError):
            transmission_probability(1.0)


class TestSIContinuous:
    @pytest.mark.parametrize("n", [2, 5, 20])
    def test_first_transmission_on_complete_graph(self, n):
        # stop right after the first transmission (the default threshold is 1 on K2)
        p = SimParams("si", n_sims=5000, rng_seed=3, threshold=2)
        b = run_batch(complete(n), [0], p)
        mc_close(b.first_transmission_time[0], 1 / (n - 1))

    def test_path_half_coverage(self):
        # P3 from an end: one exponential(1) wait until 2 nodes are infected
        fits = tthc_outcomes(path(3), [0], SimParams("si", n_sims=4000, rng_seed=1))
        mc_close(run_batch(path(3), [0], SimParams("si", n_sims=4000, rng_seed=1)).threshold_time[0], 1.0)
        assert fits[0].shape == pytest.approx(1.0, rel=0.15)

    def test_triangle_half_coverage(self):
        b = run_batch(complete(3), [0], SimParams("si", n_sims=4000, rng_seed=2))
        mc_close(b.threshold_time[0], 0.5)

    def test_weighted_rate(self):
        g = Graph.from_edges(2, [(0, 1, 4.0)], weighted=True)
        b = run_batch(g, [0], SimParams("si", n_sims=4000, rng_seed=1, threshold=2))
        mc_close(b.threshold_time[0], 0.25)

    def test_directed_arcs_only(self):
        g = Graph.from_edges(2, [(0, 1)], directed=True)
        b = run_batch(g, [1], SimParams("si", n_sims=10, threshold=2))
        assert np.all(b.ever_infected == 1)
        assert np.all(np.isnan(b.threshold_time))

    def test_single_run_api(self):
        rec = simulate_si_continuous(star(4), 0, np.random.default_rng(0))
        assert rec.ever_infected == half_threshold(5)
        assert rec.tthc is not None and rec.tthc > 0
        assert simulate_si_continuous(star(4), 0, 7) == simulate_si_continuous(star(4), 0, 7)
        k2 = simulate_si_continuous(complete(2), 0, 1, threshold=2)
        assert k2.ever_infected == 2 and k2.tthc == k2.first_transmission_time

    def test_transmission_cap(self):
        g = from_nx(nx.barabasi_albert_graph(300, 2, seed=1))
        b = run_batch(g, [0], SimParams("si", n_sims=5, max_transmissions=10))
        assert np.all(b.transmissions == 10)
        # the stopping time stands in for tthc on very large networks
        np.testing.assert_array_equal(b.threshold_time, b.end_time)
        assert np.all(b.code == 3)

    def test_disconnected_rejected(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        with pytest.raises(ValueError):
            simulate_si_continuous(g, 0, 0)
        with pytest.raises(ValueError):
            tthc_outcomes(g, [0], SimParams("si"))


class TestRecovery:
    def test_sir_k2_transmission_probability(self):
        # infection at rate beta races recovery at rate 1
        p = SimParams("sir", beta=1.5, n_sims=20000, rng_seed=5, threshold=2)
        b = run_batch(complete(2), [0], p)
        proportion_close(b.success.mean(), 1.5 / 2.5, 20000)

    def test_sis_counts_distinct_nodes(self):
        p = SimParams("sis", beta=3.0, n_sims=200, rng_seed=1)
        b = run_batch(complete(6), list(range(6)), p)
        assert b.ever_infected.max() <= 6
        assert np.all(b.ever_infected >= 1)

    def test_sis_triangle(self):
        # K3 needs one transmission (threshold 2) before the seed recovers
        p = SimParams("sis", beta=0.5, n_sims=20000, rng_seed=4)
        proportion_close(epidemic_potential(complete(3), 0, p), 0.5, 20000)

    def test_discrete_per_edge_frequency(self):
        p = SimParams("sir", "discrete", beta=0.5, n_sims=20000, rng_seed=6, threshold=2)
        b = run_batch(complete(2), [0], p)
        proportion_close(b.success.mean(), math.log(2), 20000)

    def test_discrete_sir_path(self):
        # reaching all three nodes of P3 from an end needs two transmissions in a row
        r = transmission_probability(0.3)
        p = SimParams("sir", "discrete", beta=0.3, n_sims=20000, rng_seed=9, threshold=3)
        proportion_close(epidemic_potential(path(3), 0, p), r * r, 20000)

    def test_single_run_apis(self):
        p = SimParams("sis", beta=2.0)
        rec = simulate_recovery_continuous(star(5), 0, p, np.random.default_rng(3))
        assert rec.extinct or rec.truncated or rec.ever_infected >= half_threshold(6)
        pd = SimParams("sir", "discrete", beta=0.4)
        rec = simulate_recovery_discrete(star(5), 0, pd, 11)
        assert rec.ever_infected >= 1 and rec.end_time >= 1
        with pytest.raises(ValueError):
            simulate_recovery_continuous(star(5), 0, SimParams("si"), 1)

    def test_event_cap_truncates(self):
        p = SimParams("sis", beta=50.0, n_sims=4, event_cap=20, threshold=10**6)
        b = run_batch(complete(10), [0], p)
        assert np.all(b.truncated)


class TestReproducibility:
    def test_same_seed_same_result(self):
        g = from_nx(nx.barabasi_albert_graph(150, 2, seed=3))
        p = SimParams("sis", beta=0.4, n_sims=30, rng_seed=11)
        a, b = run_batch(g, [0, 5, 9], p), run_batch(g, [0, 5, 9], p)
        np.testing.assert_array_equal(a.ever_infected, b.ever_infected)
        np.testing.assert_array_equal(a.end_time, b.end_time)

    def test_streams_are_prefix_stable_and_order_free(self):
        a = stream_seeds(1, 0, [4, 7], 10)
        b = stream_seeds(1, 0, [7, 4], 20)
        np.testing.assert_array_equal(a[0], b[1, :10])
        np.testing.assert_array_equal(a[1], b[0, :10])

    def test_threads_do_not_change_results(self):
        import numba
        g = from_nx(nx.barabasi_albert_graph(150, 2, seed=3))
        p = SimParams("sir", beta=0.6, n_sims=20, rng_seed=2)
        a = run_batch(g, range(20), p)
        old = numba.get_num_threads()
        numba.set_num_threads(1)
        try:
            b = run_batch(g, range(20), p)
        finally:
            numba.set_num_threads(old)
        np.testing.assert_array_equal(a.ever_infected, b.ever_infected)


@given(connected_graphs(min_nodes=3, max_nodes=12), st.sampled_from(["si", "sis", "sir"]),
       st.floats(0.2, 5.0), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_debug_invariants(g, model, beta, seed):
    """The kernel's debug mode re-derives the SI edge set from scratch at every event."""
    p = SimParams(model, beta=beta, n_sims=5, rng_seed=seed)
    b = run_batch(g, range(g.node_count), p, debug=True)
    assert np.all(b.ever_infected <= g.node_count)
    reached = ~np.isnan(b.threshold_time)
    np.testing.assert_array_equal(reached, b.success)
    assert np.all(b.threshold_time[reached] <= b.end_time[reached] + 1e-12)


@given(connected_graphs(min_nodes=3, max_nodes=12), st.floats(0.05, 0.95), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_discrete_invariants(g, beta, seed):
    p = SimParams("sir", "discrete", beta=beta, n_sims=5, rng_seed=seed)
    b = run_batch(g, range(g.node_count), p)
    assert np.all((b.ever_infected >= 1) & (b.ever_infected <= g.node_count))
    assert np.all(b.code != 2)  # SIR always ends within n rounds


class TestGamma:
    def test_recovers_parameters(self):
        x = np.random.default_rng(0).gamma(3.0, 1 / 2.0, size=200_000)
        f = fit_gamma(x)
        assert f.shape == pytest.approx(3.0, rel=0.02)
        assert f.rate == pytest.approx(2.0, rel=0.02)
        assert f.mean == pytest.approx(x.mean())

    def test_moments_formula(self):
        x = [1.0, 2.0, 4.0]
        m, v = np.mean(x), np.var(x, ddof=1)
        f = fit_gamma(x)
        assert (f.shape, f.rate) == pytest.approx((m * m / v, m / v))

    def test_degenerate(self):
        f = fit_gamma([2.0, 2.0, 2.0])
        assert f.degenerate and f.mean == 2.0 and math.isinf(f.shape)

    def test_nan_dropped_and_empty(self):
        assert fit_gamma([1.0, np.nan, 3.0]).n == 2
        with pytest.raises(ValueError):
            fit_gamma([np.nan])


class TestCalibration:
    def test_reaches_band(self):
        g = from_nx(nx.barabasi_albert_graph(300, 2, seed=4))
        p = SimParams("sis", n_sims=50, rng_seed=1)
        sample = list(range(0, 300, 10))
        cal = calibrate_beta(g, p, sample)
        assert not cal.below_target
        assert cal.fraction_in_band >= 0.8
        assert cal.beta == pytest.approx(cal.multiplier / largest_eigenvalue(g))
        # the recorded probe is reproducible
        epo = epidemic_potentials(g, sample, p.with_beta(cal.beta),
                                  rng_seeds=stream_seeds(1, 1, sample, 50))
        assert np.mean((epo >= 0.05) & (epo <= 0.95)) == pytest.approx(cal.fraction_in_band)

    def test_beta_from_multiple(self):
        assert beta_from_multiple(star(4), 2.0) == pytest.approx(1.0)

    def test_rejects_si(self):
        with pytest.raises(ValueError):
            calibrate_beta(star(4), SimParams("si"), [0])
