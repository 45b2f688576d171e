import numpy as np
import pytest

from linksched.graphs import ConflictGraph


def random_conflict_graph(k: int, edge_prob: float, rng: np.random.Generator) -> ConflictGraph:
    """Random symmetric 0/1 adjacency with zero diagonal."""
    a = (rng.random((k, k)) < edge_prob).astype(float)
    a = np.triu(a, 1)
    return ConflictGraph.from_adjacency(a + a.T)


def triangle_graph() -> ConflictGraph:
    return ConflictGraph.from_adjacency(
        [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    )


def path3_graph() -> ConflictGraph:
    """Three links in a path: 0 - 1 - 2."""
    return ConflictGraph.from_adjacency(
        [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    )


def edgeless_graph(k: int) -> ConflictGraph:
    return ConflictGraph.from_adjacency(np.zeros((k, k)))


def single_edge_graph() -> ConflictGraph:
    return ConflictGraph.from_adjacency([[0, 1], [1, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
