"""Rolling a trained policy forward under online dual-variable descent.

The dual vector starts at zero and is updated after every step from the
observed successes against the (resilience-relaxed) requirement; feeding it
back into the policy lets the schedule adapt until starved links catch up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ConflictGraph
from .metrics import MetricsRecord, compute_metrics
from .policy import EVAL, TRAIN, PolicyParameters, forward, threshold
from .scheduling import Requirements, Schedule, successful_transmissions

__all__ = [
    "DUAL_SIGNAL_BINARY",
    "DUAL_SIGNAL_RELAXED",
    "NORM_STATS_BATCH",
    "NORM_STATS_RUNNING",
    "DualState",
    "ExecConfig",
    "ExecTrace",
    "dual_update",
    "execute",
    "execute_policy",
]

DUAL_SIGNAL_BINARY = "binary"
DUAL_SIGNAL_RELAXED = "relaxed"
NORM_STATS_BATCH = "batch"
NORM_STATS_RUNNING = "running"


@dataclass(frozen=True)
class DualState:
    """Nonnegative multiplier vector and its descent step size.

    A zero step size is accepted as the degenerate frozen-dual case.
    """

    lam: np.ndarray
    eta: float

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).copy()
        if lam.ndim != 1:
            raise ValueError(f"dual vector must be 1-D, got shape {lam.shape}")
        if np.any(lam < 0.0):
            raise ValueError("dual vector entries must be nonnegative")
        if self.eta < 0.0:
            raise ValueError(f"dual step size must be nonnegative, got {self.eta}")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class ExecConfig:
    """Execution settings.

    ``dual_signal`` picks the success measure driving the dual update: the
    relaxed policy output (the dual gradient of the augmented Lagrangian,
    smooth; the default) or the thresholded schedule's binary successes.
    ``norm_stats`` selects the policy's normalization statistics during the
    rollout: ``batch`` normalizes over the nodes of the executed graph itself
    (scale-adaptive; the default), ``running`` uses the statistics frozen
    during training.
    """

    steps: int = 200
    eta_dual: float = 2.0
    resilience: float = 0.05
    dual_signal: str = DUAL_SIGNAL_RELAXED
    norm_stats: str = NORM_STATS_BATCH

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.eta_dual < 0.0:
            raise ValueError(f"eta_dual must be nonnegative, got {self.eta_dual}")
        if self.resilience < 0.0:
            raise ValueError(f"resilience must be nonnegative, got {self.resilience}")
        if self.dual_signal not in (DUAL_SIGNAL_BINARY, DUAL_SIGNAL_RELAXED):
            raise ValueError(f"unknown dual_signal '{self.dual_signal}'")
        if self.norm_stats not in (NORM_STATS_BATCH, NORM_STATS_RUNNING):
            raise ValueError(f"unknown norm_stats '{self.norm_stats}'")


@dataclass(frozen=True)
class ExecTrace:
    """T binary schedules, T+1 dual vectors, and the run's metrics."""

    schedules: list[Schedule]
    lambda_trajectory: np.ndarray
    metrics: MetricsRecord


def dual_update(state: DualState, success, req: Requirements, r: float = 0.0) -> DualState:
    """Projected dual step toward the resilience-relaxed target delta - r."""
    success = np.asarray(success, dtype=float)
    if np.any(success < 0.0):
        raise ValueError("success entries must be nonnegative")
    lam = np.maximum(state.lam - state.eta * (success - (req.delta - r)), 0.0)
    return DualState(lam=lam, eta=state.eta)


def execute_policy(
    graph: ConflictGraph,
    policy_fn,
    req: Requirements,
    cfg: ExecConfig,
    graph_id: str = "",
) -> ExecTrace:
    """Closed-loop rollout of an arbitrary policy ``lambda -> outputs in [0,1]``.

    Schedules are the thresholded outputs; the dual signal uses either those
    binary successes or the relaxed outputs, per ``cfg.dual_signal``.  Metrics
    are always computed from the binary schedules.
    """
    if req.delta.shape != (graph.n_links,):
        raise ValueError(
            f"requirements length {req.delta.shape} does not match K={graph.n_links}"
        )
    positive = req.delta[req.delta > 0]
    if cfg.resilience > 0 and positive.size and cfg.resilience >= positive.min():
        raise ValueError(
            f"resilience {cfg.resilience} must be below the smallest positive "
            f"requirement {positive.min()}"
        )
    state = DualState(lam=np.zeros(graph.n_links), eta=cfg.eta_dual)
    trajectory = [state.lam]
    schedules: list[Schedule] = []
    adj = graph.adjacency
    for _ in range(cfg.steps):
        outputs = np.asarray(policy_fn(state.lam), dtype=float)
        sched = threshold(outputs)
        schedules.append(sched)
        if cfg.dual_signal == DUAL_SIGNAL_BINARY:
            success = successful_transmissions(graph, sched)
        else:
            success = outputs * np.maximum(1.0 - adj @ outputs, 0.0)
        state = dual_update(state, success, req, cfg.resilience)
        trajectory.append(state.lam)
    metrics = compute_metrics(graph, schedules, req, graph_id=graph_id)
    return ExecTrace(
        schedules=schedules,
        lambda_trajectory=np.stack(trajectory),
        metrics=metrics,
    )


def execute(
    graph: ConflictGraph,
    params: PolicyParameters,
    req: Requirements,
    cfg: ExecConfig,
    graph_id: str = "",
) -> ExecTrace:
    """Rollout of the trained graph-convolutional policy.

    With ``norm_stats="batch"`` the policy normalizes over the executed
    graph's own node population (a pure pass; running statistics are never
    touched); with ``"running"`` it uses the statistics frozen at training
    time.  Parameters are read-only throughout.
    """
    params.validate()
    phase = TRAIN if cfg.norm_stats == NORM_STATS_BATCH else EVAL

    def policy_fn(lam):
        outputs, _ = forward(graph, lam, params, phase=phase)
        return outputs

    return execute_policy(graph, policy_fn, req, cfg, graph_id=graph_id)
