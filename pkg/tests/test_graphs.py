import math

import numpy as np
import pytest

from linksched.graphs import (
    CommGraph,
    ConflictGraph,
    GraphFormatError,
    conflict_degrees,
    generate_comm_graph,
    graph_stats,
    line_graph,
    load_graph,
    save_graph,
    shift,
)

from conftest import edgeless_graph, random_conflict_graph, triangle_graph


class TestGenerateCommGraph:
    def test_four_nodes_is_four_cycle(self):
        # 2x2 grid fully occupied: orthogonal neighbors connect at one cell
        # side, diagonals at sqrt(2) sides do not.
        comm = generate_comm_graph(4, 1.2, seed=3)
        assert comm.n_nodes == 4
        assert len(comm.edges) == 4
        assert all(d == 2 for d in comm.degrees())
        # diagonal pairs absent
        assert (0, 3) not in comm.edges and (1, 2) not in comm.edges

    def test_deterministic_given_seed(self):
        a = generate_comm_graph(50, 1.2, seed=11)
        b = generate_comm_graph(50, 1.2, seed=11)
        assert a.edges == b.edges
        assert np.array_equal(a.positions, b.positions)
        c = generate_comm_graph(50, 1.2, seed=12)
        assert c.edges != a.edges

    def test_positions_are_distinct_cell_centers(self):
        n = 37
        comm = generate_comm_graph(n, 1.2, seed=5)
        grid = math.isqrt(n - 1) + 1
        l_cell = math.sqrt(n) / grid
        # every coordinate is an odd multiple of l_cell / 2 inside the workspace
        scaled = comm.positions / (l_cell / 2)
        assert np.allclose(scaled, np.round(scaled))
        assert np.all(comm.positions > 0) and np.all(comm.positions < math.sqrt(n))
        assert len({tuple(p) for p in comm.positions}) == n

    def test_radius_rule(self):
        n = 60
        comm = generate_comm_graph(n, 1.2, seed=9)
        grid = math.isqrt(n - 1) + 1
        radius = 1.2 * math.sqrt(n) / grid
        edge_set = set(comm.edges)
        for i in range(n):
            for j in range(i + 1, n):
                dist = np.linalg.norm(comm.positions[i] - comm.positions[j])
                assert ((i, j) in edge_set) == (dist <= radius)

    def test_rejects_tiny_or_bad_inputs(self):
        with pytest.raises(ValueError):
            generate_comm_graph(1, 1.2, seed=0)
        with pytest.raises(ValueError):
            generate_comm_graph(10, 0.0, seed=0)

    def test_mean_degree_statistics(self):
        rng = np.random.default_rng(2024)
        degs = []
        for _ in range(50):
            n = int(rng.integers(200, 301))
            seed = int(rng.integers(0, 2**31 - 1))
            degs.append(generate_comm_graph(n, 1.2, seed).degrees().mean())
        assert abs(np.mean(degs) - 4.0) <= 0.5


class TestLineGraph:
    def test_single_edge(self):
        comm = CommGraph(n_nodes=2, positions=[[0.0, 0.0], [1.0, 0.0]], edges=((0, 1),))
        conflict = line_graph(comm)
        assert conflict.n_links == 1
        assert conflict.adjacency.sum() == 0

    def test_path_two_links(self):
        comm = CommGraph(
            n_nodes=3,
            positions=[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            edges=((0, 1), (1, 2)),
        )
        conflict = line_graph(comm)
        assert conflict.n_links == 2
        assert conflict.adjacency[0, 1] == 1

    def test_star_three_leaves_is_triangle(self):
        comm = CommGraph(
            n_nodes=4,
            positions=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]],
            edges=((0, 1), (0, 2), (0, 3)),
        )
        conflict = line_graph(comm)
        assert conflict.n_links == 3
        assert np.array_equal(conflict.adjacency, triangle_graph().adjacency)

    def test_no_links_error(self):
        comm = CommGraph(n_nodes=2, positions=[[0.0, 0.0], [5.0, 5.0]], edges=())
        with pytest.raises(ValueError, match="no links"):
            line_graph(comm)

    def test_link_order_lexicographic(self):
        comm = generate_comm_graph(30, 1.2, seed=21)
        conflict = line_graph(comm)
        assert conflict.link_endpoints == tuple(sorted(conflict.link_endpoints))

    def test_degree_identity(self):
        # conflict degree of link (u, v) is deg(u) + deg(v) - 2
        for seed in range(5):
            comm = generate_comm_graph(40, 1.2, seed=seed)
            if not comm.edges:
                continue
            conflict = line_graph(comm)
            deg = comm.degrees()
            expected = np.array([deg[u] + deg[v] - 2 for u, v in conflict.link_endpoints])
            assert np.array_equal(expected, conflict_degrees(conflict))


class TestConflictGraphValidation:
    def test_rejects_asymmetric(self):
        adj = np.zeros((3, 3))
        adj[0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            ConflictGraph(adjacency=adj)

    def test_rejects_nonzero_diagonal(self):
        adj = np.eye(2)
        with pytest.raises(ValueError, match="diagonal"):
            ConflictGraph(adjacency=adj)

    def test_rejects_inconsistent_endpoints(self):
        adj = np.zeros((2, 2))
        with pytest.raises(ValueError, match="inconsistent"):
            ConflictGraph(adjacency=adj, link_endpoints=((0, 1), (1, 2)))


class TestShift:
    def test_edgeless_zero(self, rng):
        g = edgeless_graph(5)
        x = rng.normal(size=5)
        assert np.array_equal(shift(g, x), np.zeros(5))

    def test_triangle_example(self):
        assert np.array_equal(shift(triangle_graph(), [1.0, 1.0, 0.0]), [1.0, 1.0, 2.0])

    def test_zero_signal(self, rng):
        g = random_conflict_graph(8, 0.4, rng)
        assert np.array_equal(shift(g, np.zeros(8)), np.zeros(8))

    def test_linearity(self, rng):
        for _ in range(20):
            g = random_conflict_graph(int(rng.integers(2, 12)), 0.4, rng)
            k = g.n_links
            x, y = rng.normal(size=k), rng.normal(size=k)
            a, b = rng.normal(), rng.normal()
            lhs = shift(g, a * x + b * y)
            rhs = a * shift(g, x) + b * shift(g, y)
            assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            shift(triangle_graph(), [1.0, 2.0])


class TestGraphStats:
    def test_triangle(self):
        stats = graph_stats(triangle_graph())
        assert stats.n_links == 3
        assert stats.mean_degree == 2.0
        assert stats.degree_histogram == {2: 3}

    def test_path_line_graph(self):
        comm = CommGraph(
            n_nodes=3,
            positions=[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            edges=((0, 1), (1, 2)),
        )
        stats = graph_stats(line_graph(comm))
        assert stats.n_links == 2
        assert stats.mean_degree == 1.0


class TestSaveLoad:
    def test_comm_round_trip(self, tmp_path):
        comm = generate_comm_graph(25, 1.2, seed=4)
        path = tmp_path / "comm.json"
        save_graph(comm, path)
        loaded = load_graph(path)
        assert isinstance(loaded, CommGraph)
        assert loaded.edges == comm.edges
        assert np.array_equal(loaded.positions, comm.positions)
        assert loaded.seed == comm.seed

    def test_conflict_round_trip(self, tmp_path):
        conflict = line_graph(generate_comm_graph(25, 1.2, seed=4))
        path = tmp_path / "conflict.json"
        save_graph(conflict, path)
        loaded = load_graph(path)
        assert isinstance(loaded, ConflictGraph)
        assert np.array_equal(loaded.adjacency, conflict.adjacency)
        assert loaded.link_endpoints == conflict.link_endpoints

    def test_rejects_reversed_edge(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"type": "conflict", "n": 3, "edges": [[2, 1]], "seed": 0}')
        with pytest.raises(GraphFormatError, match="i<j"):
            load_graph(path)

    def test_rejects_diagonal_edge(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"type": "conflict", "n": 3, "edges": [[1, 1]], "seed": 0}')
        with pytest.raises(GraphFormatError, match="diagonal"):
            load_graph(path)

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(GraphFormatError, match="line"):
            load_graph(path)

    def test_rejects_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"type": "conflict", "n": 2, "seed": 0}')
        with pytest.raises(GraphFormatError, match="edges"):
            load_graph(path)
