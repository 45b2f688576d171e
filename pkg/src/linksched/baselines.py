"""Heuristic schedulers: persistence-probability and independent-set based,
each with an optional collision-avoidance pass, plus greedy and exact
maximum-independent-set solvers used for sizing and as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ConflictGraph, conflict_degrees, conflict_edges
from .scheduling import Schedule

__all__ = [
    "P_PERSISTENT",
    "MIS_RANDOM",
    "BaselineConfig",
    "p_persistent_schedule",
    "resolve_collisions",
    "greedy_mis",
    "exact_mis",
    "mis_random_schedule",
    "baseline_schedule",
]

P_PERSISTENT = "p_persistent"
MIS_RANDOM = "mis_random"

_EXACT_MIS_MAX_LINKS = 30


@dataclass(frozen=True)
class BaselineConfig:
    kind: str = P_PERSISTENT
    collision_avoidance: bool = False
    steps: int = 200
    seed: int = 0
    persistence_exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in (P_PERSISTENT, MIS_RANDOM):
            raise ValueError(f"unknown baseline kind '{self.kind}'")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.persistence_exponent <= 0:
            raise ValueError(
                f"persistence_exponent must be positive, got {self.persistence_exponent}"
            )


def _resolve_collisions_values(
    edges: list[tuple[int, int]], values: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    s = values.copy()
    while True:
        live = [(i, j) for i, j in edges if s[i] == 1.0 and s[j] == 1.0]
        if not live:
            return s
        order = rng.permutation(len(live))
        for idx in order:
            i, j = live[idx]
            if s[i] == 1.0 and s[j] == 1.0:
                s[i if rng.random() < 0.5 else j] = 0.0


def resolve_collisions(
    graph: ConflictGraph, s: Schedule, rng: np.random.Generator
) -> Schedule:
    """Turn off one link of each scheduled conflicting pair, visited in a
    seeded random order, until no scheduled pair conflicts.

    The result never schedules anything the input did not.
    """
    if s.mode != "binary":
        raise ValueError("collision resolution requires a binary schedule")
    if s.values.shape != (graph.n_links,):
        raise ValueError(
            f"schedule length {s.values.shape} does not match K={graph.n_links}"
        )
    resolved = _resolve_collisions_values(conflict_edges(graph), s.values, rng)
    return Schedule.binary(resolved)


def p_persistent_schedule(graph: ConflictGraph, cfg: BaselineConfig) -> list[Schedule]:
    """Independent Bernoulli transmissions at p_i = (1 + d_i)^-alpha per step,
    with d_i the conflict degree (alpha = 1 by default)."""
    rng = np.random.default_rng(cfg.seed)
    degrees = conflict_degrees(graph)
    probs = (1.0 + degrees) ** (-cfg.persistence_exponent)
    edges = conflict_edges(graph)
    schedules = []
    for _ in range(cfg.steps):
        values = (rng.random(graph.n_links) < probs).astype(float)
        if cfg.collision_avoidance:
            values = _resolve_collisions_values(edges, values, rng)
        schedules.append(Schedule.binary(values))
    return schedules


def greedy_mis(graph: ConflictGraph) -> list[int]:
    """Maximal independent set by ascending-degree greedy, ties by index."""
    degrees = conflict_degrees(graph)
    order = np.lexsort((np.arange(graph.n_links), degrees))
    taken = np.zeros(graph.n_links, dtype=bool)
    blocked = np.zeros(graph.n_links, dtype=bool)
    adj = graph.adjacency
    for v in order:
        if not blocked[v]:
            taken[v] = True
            blocked[adj[v] > 0] = True
    return [int(v) for v in np.where(taken)[0]]


def exact_mis(graph: ConflictGraph) -> list[int]:
    """Maximum independent set by branch and bound over vertex bitmasks.

    Guarded to small instances; intended as a sizing/test oracle, not for
    experiment-scale graphs.
    """
    k = graph.n_links
    if k > _EXACT_MIS_MAX_LINKS:
        raise ValueError(
            f"exact search is guarded to K <= {_EXACT_MIS_MAX_LINKS}, got K={k}"
        )
    neighbors = [0] * k
    for i, j in conflict_edges(graph):
        neighbors[i] |= 1 << j
        neighbors[j] |= 1 << i

    best_mask = 0
    best_size = 0

    def search(mask: int, chosen: int, size: int) -> None:
        nonlocal best_mask, best_size
        if size + mask.bit_count() <= best_size:
            return
        if mask == 0:
            if size > best_size:
                best_size = size
                best_mask = chosen
            return
        # branch on the remaining vertex with the most remaining neighbors
        pivot, pivot_deg = -1, -1
        m = mask
        while m:
            v = (m & -m).bit_length() - 1
            deg = (neighbors[v] & mask).bit_count()
            if deg > pivot_deg:
                pivot, pivot_deg = v, deg
            m &= m - 1
        bit = 1 << pivot
        search(mask & ~bit & ~neighbors[pivot], chosen | bit, size + 1)
        search(mask & ~bit, chosen, size)

    search((1 << k) - 1, 0, 0)
    return [v for v in range(k) if best_mask >> v & 1]


def mis_random_schedule(graph: ConflictGraph, cfg: BaselineConfig) -> list[Schedule]:
    """Schedule a uniformly random subset of links each step, sized by the
    greedy independent set."""
    rng = np.random.default_rng(cfg.seed)
    m = len(greedy_mis(graph))
    edges = conflict_edges(graph)
    schedules = []
    for _ in range(cfg.steps):
        values = np.zeros(graph.n_links)
        values[rng.choice(graph.n_links, size=m, replace=False)] = 1.0
        if cfg.collision_avoidance:
            values = _resolve_collisions_values(edges, values, rng)
        schedules.append(Schedule.binary(values))
    return schedules


def baseline_schedule(graph: ConflictGraph, cfg: BaselineConfig) -> list[Schedule]:
    """Dispatch on the configured baseline kind."""
    if cfg.kind == P_PERSISTENT:
        return p_persistent_schedule(graph, cfg)
    return mis_random_schedule(graph, cfg)
