"""Per-run scheduling metrics: success rates, transmission counts, violations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import ConflictGraph
from .scheduling import Requirements, Schedule, time_avg_success, violation_level

__all__ = ["MetricsRecord", "compute_metrics"]


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregates of one execution over a horizon on one graph.

    ``mean_violation`` averages the clipped violation level over all links
    (satisfied links contribute 0); ``violation_fractions`` lists the levels
    of the violating links only, paired with ``violating_links``.
    """

    graph_id: str
    delta: float
    avg_success_fraction: float
    objective_fraction: float
    total_transmissions: float
    successful_transmissions: float
    violating_links: list[int] = field(default_factory=list)
    violation_fractions: list[float] = field(default_factory=list)
    mean_violation: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.objective_fraction <= 1.0:
            raise ValueError(f"objective_fraction {self.objective_fraction} outside [0, 1]")
        if self.successful_transmissions > self.total_transmissions + 1e-9:
            raise ValueError("successful transmissions exceed total transmissions")
        if len(self.violating_links) != len(self.violation_fractions):
            raise ValueError("violating_links and violation_fractions lengths differ")


def compute_metrics(
    graph: ConflictGraph,
    schedules: list[Schedule],
    delta: float | Requirements,
    graph_id: str = "",
) -> MetricsRecord:
    """Summarize a binary schedule sequence against a transmission requirement.

    A scalar ``delta`` means a uniform requirement; the record's ``delta``
    label is the mean requirement either way.
    """
    if isinstance(delta, Requirements):
        req = delta
    else:
        req = Requirements.uniform(graph.n_links, float(delta))
    # keep the label float-exact for uniform requirements (it keys CSV rows)
    if req.delta.size and np.all(req.delta == req.delta[0]):
        delta_label = float(req.delta[0])
    else:
        delta_label = float(req.delta.mean())
    avg = time_avg_success(graph, schedules)
    levels = violation_level(avg, req)
    clipped = np.maximum(levels, 0.0)
    violating = np.where(levels > 0.0)[0]
    total_tx = float(sum(s.values.sum() for s in schedules))
    successful_tx = float(avg.sum() * len(schedules))
    return MetricsRecord(
        graph_id=graph_id,
        delta=delta_label,
        avg_success_fraction=float(avg.mean()),
        objective_fraction=float(avg.mean()),
        total_transmissions=total_tx,
        successful_transmissions=successful_tx,
        violating_links=[int(i) for i in violating],
        violation_fractions=[float(levels[i]) for i in violating],
        mean_violation=float(clipped.mean()),
    )
