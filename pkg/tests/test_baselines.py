import numpy as np
import pytest

from linksched.baselines import (
    BaselineConfig,
    baseline_schedule,
    exact_mis,
    greedy_mis,
    mis_random_schedule,
    p_persistent_schedule,
    resolve_collisions,
)
from linksched.graphs import ConflictGraph, conflict_degrees
from linksched.metrics import compute_metrics
from linksched.scheduling import Schedule, objective

from conftest import (
    edgeless_graph,
    path3_graph,
    random_conflict_graph,
    single_edge_graph,
    triangle_graph,
)


class TestPPersistent:
    def test_isolated_link_always_succeeds(self):
        g = edgeless_graph(1)
        cfg = BaselineConfig(kind="p_persistent", steps=50, seed=3)
        schedules = p_persistent_schedule(g, cfg)
        assert all(s.values[0] == 1.0 for s in schedules)

    def test_transmission_frequency_matches_probability(self):
        # all links at conflict degree 4 -> p = 0.2; check within 3 binomial
        # standard deviations over the run
        k = 1000
        adj = np.zeros((k, k))
        for i in range(k):
            for off in (1, 2):
                adj[i, (i + off) % k] = 1.0
                adj[(i + off) % k, i] = 1.0
        g = ConflictGraph.from_adjacency(adj)
        assert np.all(conflict_degrees(g) == 4.0)
        steps = 200
        cfg = BaselineConfig(kind="p_persistent", steps=steps, seed=5)
        schedules = p_persistent_schedule(g, cfg)
        freq = np.mean([s.values for s in schedules], axis=0)
        sigma = np.sqrt(0.2 * 0.8 / steps)
        assert np.mean(np.abs(freq - 0.2) <= 3 * sigma) > 0.99

    def test_deterministic(self):
        g = path3_graph()
        cfg = BaselineConfig(kind="p_persistent", steps=20, seed=9)
        a = p_persistent_schedule(g, cfg)
        b = p_persistent_schedule(g, cfg)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)


class TestResolveCollisions:
    def test_conflict_free_unchanged(self, rng):
        g = path3_graph()
        s = Schedule.binary([1.0, 0.0, 1.0])
        out = resolve_collisions(g, s, rng)
        assert np.array_equal(out.values, s.values)

    def test_single_edge_fair_coin(self):
        g = single_edge_graph()
        s = Schedule.binary([1.0, 1.0])
        kept0 = 0
        trials = 400
        for seed in range(trials):
            out = resolve_collisions(g, s, np.random.default_rng(seed))
            assert out.values.sum() == 1.0
            kept0 += int(out.values[0] == 1.0)
        # binomial(400, 0.5): 4-sigma window
        assert abs(kept0 / trials - 0.5) < 0.1

    def test_output_always_independent(self, rng):
        for _ in range(30):
            k = int(rng.integers(2, 15))
            g = random_conflict_graph(k, 0.5, rng)
            values = (rng.random(k) < 0.7).astype(float)
            out = resolve_collisions(g, Schedule.binary(values), rng)
            assert out.values @ g.adjacency @ out.values == 0.0
            assert np.all(out.values <= values)
            assert objective(g, out.values) == out.values.sum()


class TestGreedyMis:
    def test_edgeless_takes_all(self):
        g = edgeless_graph(5)
        assert greedy_mis(g) == [0, 1, 2, 3, 4]

    def test_triangle(self):
        assert len(greedy_mis(triangle_graph())) == 1

    def test_path(self):
        assert greedy_mis(path3_graph()) == [0, 2]

    def test_independent_and_maximal(self, rng):
        for _ in range(30):
            k = int(rng.integers(2, 25))
            g = random_conflict_graph(k, 0.3, rng)
            chosen = greedy_mis(g)
            values = np.zeros(k)
            values[chosen] = 1.0
            assert values @ g.adjacency @ values == 0.0
            # maximality: every unchosen link conflicts with a chosen one
            for v in range(k):
                if v not in chosen:
                    assert g.adjacency[v, chosen].sum() > 0


class TestExactMis:
    def test_triangle(self):
        assert len(exact_mis(triangle_graph())) == 1

    def test_five_cycle(self):
        adj = np.zeros((5, 5))
        for i in range(5):
            adj[i, (i + 1) % 5] = adj[(i + 1) % 5, i] = 1.0
        assert len(exact_mis(ConflictGraph.from_adjacency(adj))) == 2

    def test_edgeless(self):
        assert exact_mis(edgeless_graph(4)) == [0, 1, 2, 3]

    def test_guard(self, rng):
        g = random_conflict_graph(31, 0.2, rng)
        with pytest.raises(ValueError, match="K <= 30"):
            exact_mis(g)

    def test_at_least_greedy(self, rng):
        for _ in range(25):
            k = int(rng.integers(2, 21))
            g = random_conflict_graph(k, 0.3, rng)
            exact = exact_mis(g)
            values = np.zeros(k)
            values[exact] = 1.0
            assert values @ g.adjacency @ values == 0.0
            assert len(exact) >= len(greedy_mis(g))


class TestMisRandom:
    def test_schedules_m_links_per_step(self, rng):
        g = random_conflict_graph(12, 0.4, rng)
        m = len(greedy_mis(g))
        cfg = BaselineConfig(kind="mis_random", steps=25, seed=1)
        for s in mis_random_schedule(g, cfg):
            assert s.values.sum() == m

    def test_edgeless_all_links_every_step(self):
        g = edgeless_graph(6)
        cfg = BaselineConfig(kind="mis_random", steps=10, seed=2)
        for s in mis_random_schedule(g, cfg):
            assert np.array_equal(s.values, np.ones(6))

    def test_collision_avoidance_beats_naive_on_dense_graphs(self, rng):
        wins = 0
        for seed in range(20):
            g = random_conflict_graph(30, 0.3, np.random.default_rng(seed + 100))
            naive = mis_random_schedule(
                g, BaselineConfig(kind="mis_random", collision_avoidance=False, steps=40, seed=seed)
            )
            ca = mis_random_schedule(
                g, BaselineConfig(kind="mis_random", collision_avoidance=True, steps=40, seed=seed)
            )
            naive_obj = np.mean([objective(g, s) for s in naive])
            ca_obj = np.mean([objective(g, s) for s in ca])
            wins += int(ca_obj > naive_obj)
        assert wins >= 15

    def test_dispatch(self, rng):
        g = random_conflict_graph(8, 0.4, rng)
        for kind in ("p_persistent", "mis_random"):
            cfg = BaselineConfig(kind=kind, steps=5, seed=0)
            schedules = baseline_schedule(g, cfg)
            assert len(schedules) == 5

    def test_metrics_pipeline(self, rng):
        g = random_conflict_graph(10, 0.4, rng)
        cfg = BaselineConfig(kind="mis_random", collision_avoidance=True, steps=30, seed=4)
        rec = compute_metrics(g, baseline_schedule(g, cfg), 0.1, graph_id="toy")
        assert rec.graph_id == "toy"
        assert 0.0 <= rec.objective_fraction <= 1.0
        assert rec.successful_transmissions <= rec.total_transmissions
