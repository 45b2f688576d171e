"""Grid communication graphs and the link conflict graphs derived from them.

A communication graph places nodes at the centers of randomly selected cells
of a square lattice and connects nodes within a communication radius.  Its
line graph is the conflict graph: one node per communication link, with an
edge between two links whenever they share a communication endpoint.  All
scheduling semantics downstream operate on the conflict graph's adjacency
matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GraphFormatError",
    "CommGraph",
    "ConflictGraph",
    "GraphStats",
    "generate_comm_graph",
    "line_graph",
    "shift",
    "normalized_adjacency",
    "conflict_degrees",
    "conflict_edges",
    "graph_stats",
    "save_graph",
    "load_graph",
]


class GraphFormatError(ValueError):
    """A graph file failed to parse or violates the documented format."""


@dataclass(frozen=True)
class CommGraph:
    """Communication graph: nodes with planar positions, symmetric edge set.

    Edges are stored once with ``u < v``; node indices are 0-based.
    """

    n_nodes: int
    positions: np.ndarray
    edges: tuple[tuple[int, int], ...]
    seed: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.n_nodes, 2):
            raise ValueError(
                f"positions shape {pos.shape} does not match n_nodes={self.n_nodes}"
            )
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop edge ({u},{v}) is not allowed")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u},{v}) out of range for n_nodes={self.n_nodes}")
            if u > v:
                raise ValueError(f"edge ({u},{v}) must be stored with u < v")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
        if len({(float(x), float(y)) for x, y in pos}) != self.n_nodes:
            raise ValueError("node positions must be distinct")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=float)
        for u, v in self.edges:
            deg[u] += 1.0
            deg[v] += 1.0
        return deg


@dataclass(frozen=True)
class ConflictGraph:
    """Conflict graph over K links: binary symmetric adjacency, zero diagonal.

    ``link_endpoints`` maps each link back to its communication-graph node
    pair; it is ``None`` for graphs built directly from an adjacency matrix.
    """

    adjacency: np.ndarray
    link_endpoints: tuple[tuple[int, int], ...] | None = None
    source_seed: int = 0

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 1:
            raise ValueError("conflict graph must have at least one link")
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        adj = adj.copy()
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if self.link_endpoints is not None:
            ends = tuple((int(u), int(v)) for u, v in self.link_endpoints)
            if len(ends) != adj.shape[0]:
                raise ValueError(
                    f"{len(ends)} link endpoints for {adj.shape[0]} links"
                )
            object.__setattr__(self, "link_endpoints", ends)
            expected = _adjacency_from_endpoints(ends)
            if not np.array_equal(adj, expected):
                raise ValueError("adjacency inconsistent with shared link endpoints")

    @property
    def n_links(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_adjacency(cls, adjacency, source_seed: int = 0) -> "ConflictGraph":
        return cls(adjacency=np.asarray(adjacency, dtype=float), source_seed=source_seed)


def _adjacency_from_endpoints(links: tuple[tuple[int, int], ...]) -> np.ndarray:
    k = len(links)
    adj = np.zeros((k, k), dtype=float)
    incident: dict[int, list[int]] = {}
    for idx, (u, v) in enumerate(links):
        incident.setdefault(u, []).append(idx)
        incident.setdefault(v, []).append(idx)
    for ids in incident.values():
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                adj[ids[a], ids[b]] = 1.0
                adj[ids[b], ids[a]] = 1.0
    return adj


def generate_comm_graph(n_nodes: int, radius_factor: float, seed: int) -> CommGraph:
    """Generate a grid communication graph.

    The workspace is a square of side sqrt(n_nodes) split into
    ceil(sqrt(n_nodes))^2 cells; ``n_nodes`` distinct cells are chosen
    uniformly at random and one node is placed at each chosen cell's center.
    Nodes within ``radius_factor`` cell sides of each other are connected.
    Deterministic given ``seed``.
    """
    if n_nodes < 2:
        raise ValueError(f"n_nodes must be >= 2, got {n_nodes}")
    if radius_factor <= 0:
        raise ValueError(f"radius_factor must be positive, got {radius_factor}")
    grid = math.isqrt(n_nodes - 1) + 1  # ceil(sqrt(n_nodes))
    l_cell = math.sqrt(n_nodes) / grid
    rng = np.random.default_rng(seed)
    cells = np.sort(rng.choice(grid * grid, size=n_nodes, replace=False))
    cols = cells % grid
    rows = cells // grid
    positions = np.column_stack(((cols + 0.5) * l_cell, (rows + 0.5) * l_cell))
    radius_sq = (radius_factor * l_cell) ** 2
    diff = positions[:, None, :] - positions[None, :, :]
    dist_sq = (diff**2).sum(axis=-1)
    iu, ju = np.where(np.triu(dist_sq <= radius_sq, k=1))
    edges = tuple((int(i), int(j)) for i, j in zip(iu, ju))
    return CommGraph(n_nodes=n_nodes, positions=positions, edges=edges, seed=seed)


def line_graph(comm: CommGraph) -> ConflictGraph:
    """Derive the conflict graph: one link per communication edge.

    Links are ordered lexicographically by endpoint pair, so conflict-graph
    node indices are stable across runs.
    """
    if not comm.edges:
        raise ValueError("no links: communication graph has no edges")
    links = tuple(sorted(comm.edges))
    adjacency = _adjacency_from_endpoints(links)
    return ConflictGraph(adjacency=adjacency, link_endpoints=links, source_seed=comm.seed)


def normalized_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^-1/2 A D^-1/2; isolated rows stay zero."""
    deg = np.asarray(adjacency, dtype=float).sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nonzero = deg > 0
    inv_sqrt[nonzero] = 1.0 / np.sqrt(deg[nonzero])
    return adjacency * inv_sqrt[:, None] * inv_sqrt[None, :]


def shift(graph: ConflictGraph, signal, normalized: bool = False) -> np.ndarray:
    """Diffuse a node signal over the conflict graph's edges."""
    x = np.asarray(signal, dtype=float)
    if x.shape != (graph.n_links,):
        raise ValueError(f"signal length {x.shape} does not match K={graph.n_links}")
    op = normalized_adjacency(graph.adjacency) if normalized else graph.adjacency
    return op @ x


def conflict_degrees(graph: ConflictGraph) -> np.ndarray:
    return graph.adjacency.sum(axis=1)


def conflict_edges(graph: ConflictGraph) -> list[tuple[int, int]]:
    """Conflict edges as (i, j) pairs with i < j, lexicographic order."""
    iu, ju = np.where(np.triu(graph.adjacency, k=1) > 0)
    return [(int(i), int(j)) for i, j in zip(iu, ju)]


@dataclass(frozen=True)
class GraphStats:
    n_links: int
    mean_degree: float
    degree_histogram: dict[int, int] = field(default_factory=dict)


def graph_stats(graph: ConflictGraph) -> GraphStats:
    deg = conflict_degrees(graph).astype(int)
    hist: dict[int, int] = {}
    for d in deg:
        hist[int(d)] = hist.get(int(d), 0) + 1
    return GraphStats(
        n_links=graph.n_links,
        mean_degree=float(deg.mean()),
        degree_histogram=dict(sorted(hist.items())),
    )


def save_graph(graph: CommGraph | ConflictGraph, path) -> None:
    """Write a graph as JSON; edges stored once with i < j, 0-based indices."""
    path = Path(path)
    if isinstance(graph, CommGraph):
        payload = {
            "type": "comm",
            "n": graph.n_nodes,
            "edges": [[u, v] for u, v in graph.edges],
            "positions": [[float(x), float(y)] for x, y in graph.positions],
            "seed": graph.seed,
        }
    elif isinstance(graph, ConflictGraph):
        payload = {
            "type": "conflict",
            "n": graph.n_links,
            "edges": [[i, j] for i, j in conflict_edges(graph)],
            "seed": graph.source_seed,
        }
        if graph.link_endpoints is not None:
            payload["link_endpoints"] = [[u, v] for u, v in graph.link_endpoints]
    else:
        raise TypeError(f"cannot save object of type {type(graph).__name__}")
    path.write_text(json.dumps(payload) + "\n")


def _require(payload: dict, key: str, path: Path):
    if key not in payload:
        raise GraphFormatError(f"{path}: missing field '{key}'")
    return payload[key]


def _parse_edges(raw, n: int, path: Path) -> list[tuple[int, int]]:
    edges = []
    seen = set()
    for pos, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise GraphFormatError(f"{path}: edges[{pos}] is not a pair")
        i, j = pair
        if not isinstance(i, int) or not isinstance(j, int):
            raise GraphFormatError(f"{path}: edges[{pos}] entries must be integers")
        if i == j:
            raise GraphFormatError(f"{path}: edges[{pos}]=({i},{j}) has a nonzero diagonal entry")
        if i > j:
            raise GraphFormatError(
                f"{path}: edges[{pos}]=({i},{j}) violates the i<j storage rule (asymmetric entry)"
            )
        if not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"{path}: edges[{pos}]=({i},{j}) out of range for n={n}")
        if (i, j) in seen:
            raise GraphFormatError(f"{path}: duplicate edge edges[{pos}]=({i},{j})")
        seen.add((i, j))
        edges.append((i, j))
    return edges


def load_graph(path) -> CommGraph | ConflictGraph:
    """Load a graph file written by :func:`save_graph`, enforcing invariants."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise GraphFormatError(f"{path}: top-level value must be an object")
    kind = _require(payload, "type", path)
    n = _require(payload, "n", path)
    if not isinstance(n, int) or n < 1:
        raise GraphFormatError(f"{path}: field 'n' must be a positive integer")
    seed = payload.get("seed", 0)
    if not isinstance(seed, int):
        raise GraphFormatError(f"{path}: field 'seed' must be an integer")
    edges = _parse_edges(_require(payload, "edges", path), n, path)

    if kind == "comm":
        raw_pos = _require(payload, "positions", path)
        if not isinstance(raw_pos, list) or len(raw_pos) != n:
            raise GraphFormatError(f"{path}: field 'positions' must list {n} coordinate pairs")
        try:
            positions = np.asarray(raw_pos, dtype=float)
        except ValueError as exc:
            raise GraphFormatError(f"{path}: field 'positions' is not numeric") from exc
        if positions.shape != (n, 2):
            raise GraphFormatError(f"{path}: field 'positions' must be n x 2")
        try:
            return CommGraph(n_nodes=n, positions=positions, edges=tuple(edges), seed=seed)
        except ValueError as exc:
            raise GraphFormatError(f"{path}: {exc}") from exc

    if kind == "conflict":
        adj = np.zeros((n, n), dtype=float)
        for i, j in edges:
            adj[i, j] = 1.0
            adj[j, i] = 1.0
        endpoints = None
        if "link_endpoints" in payload:
            raw_ends = payload["link_endpoints"]
            if not isinstance(raw_ends, list) or len(raw_ends) != n:
                raise GraphFormatError(
                    f"{path}: field 'link_endpoints' must list {n} node pairs"
                )
            ends = []
            for pos, pair in enumerate(raw_ends):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise GraphFormatError(f"{path}: link_endpoints[{pos}] is not a pair")
                ends.append((int(pair[0]), int(pair[1])))
            endpoints = tuple(ends)
        try:
            return ConflictGraph(adjacency=adj, link_endpoints=endpoints, source_seed=seed)
        except ValueError as exc:
            raise GraphFormatError(f"{path}: {exc}") from exc

    raise GraphFormatError(f"{path}: unknown graph type '{kind}'")
