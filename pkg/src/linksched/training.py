"""Policy training by primal gradient ascent on the augmented Lagrangian.

Each epoch sweeps every training graph in a seeded shuffled order; for each
graph a fixed number of dual vectors is drawn and every (graph, dual) pair
triggers one Adam ascent step (batch size 1).  The requirement vector is
omitted from the training loss — it is constant in the parameters and only
shifts the value.  Held-out evaluation runs the executor on a read-only
parameter snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .execution import ExecConfig, execute
from .graphs import ConflictGraph
from .metrics import MetricsRecord
from .policy import (
    ArchConfig,
    PolicyParameters,
    adam_step,
    init_adam,
    init_params,
    lagrangian_value_and_grad,
)
from .scheduling import Requirements

__all__ = [
    "TrainConfig",
    "EvalPoint",
    "EvalBundle",
    "EpochRecord",
    "TrainLog",
    "sample_dual",
    "train",
]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    primal_lr: float = 5e-5
    dual_samples_per_graph: int = 10
    lambda_max: float = 2.0
    zero_mask_fraction: float = 0.0
    max_mask_fraction: float = 0.0
    seed: int = 0
    eval_every: int = 10

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.primal_lr <= 0:
            raise ValueError(f"primal_lr must be positive, got {self.primal_lr}")
        if self.dual_samples_per_graph < 1:
            raise ValueError(
                f"dual_samples_per_graph must be >= 1, got {self.dual_samples_per_graph}"
            )
        if self.lambda_max < 0:
            raise ValueError(f"lambda_max must be nonnegative, got {self.lambda_max}")
        for name in ("zero_mask_fraction", "max_mask_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.zero_mask_fraction + self.max_mask_fraction > 1.0:
            raise ValueError("zero and max mask fractions must sum to at most 1")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")


@dataclass(frozen=True)
class EvalPoint:
    """One held-out evaluation setting: a uniform requirement plus executor
    configuration (resilience may differ per requirement)."""

    delta: float
    exec_config: ExecConfig


@dataclass(frozen=True)
class EvalBundle:
    graphs: tuple[ConflictGraph, ...]
    points: tuple[EvalPoint, ...]
    graph_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("evaluation bundle needs at least one graph")
        if not self.points:
            raise ValueError("evaluation bundle needs at least one evaluation point")
        ids = self.graph_ids or tuple(f"eval_{i:03d}" for i in range(len(self.graphs)))
        if len(ids) != len(self.graphs):
            raise ValueError("graph_ids length does not match graphs")
        object.__setattr__(self, "graph_ids", ids)


@dataclass(frozen=True)
class EvalSummary:
    """Mean held-out metrics at one requirement level."""

    delta: float
    mean_violation: float
    objective_fraction: float
    records: tuple[MetricsRecord, ...] = ()


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_lagrangian: float
    eval_summaries: tuple[EvalSummary, ...] = ()


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    updates: int = 0


def sample_dual(n_links: int, cfg: TrainConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform dual sample on [0, lambda_max], with disjoint fractions of
    entries pinned to 0 and to lambda_max."""
    if n_links < 1:
        raise ValueError(f"n_links must be >= 1, got {n_links}")
    lam = rng.uniform(0.0, cfg.lambda_max, size=n_links)
    n_zero = int(round(cfg.zero_mask_fraction * n_links))
    n_max = int(round(cfg.max_mask_fraction * n_links))
    if n_zero + n_max > 0:
        order = rng.permutation(n_links)
        lam[order[:n_zero]] = 0.0
        lam[order[n_zero : n_zero + n_max]] = cfg.lambda_max
    return lam


def _evaluate(params: PolicyParameters, bundle: EvalBundle) -> tuple[EvalSummary, ...]:
    summaries = []
    for point in bundle.points:
        records = []
        for graph_id, graph in zip(bundle.graph_ids, bundle.graphs):
            req = Requirements.uniform(graph.n_links, point.delta)
            trace = execute(graph, params, req, point.exec_config, graph_id=graph_id)
            records.append(trace.metrics)
        summaries.append(
            EvalSummary(
                delta=point.delta,
                mean_violation=float(np.mean([r.mean_violation for r in records])),
                objective_fraction=float(np.mean([r.objective_fraction for r in records])),
                records=tuple(records),
            )
        )
    return tuple(summaries)


def train(
    train_graphs: list[ConflictGraph],
    cfg: TrainConfig,
    arch: ArchConfig,
    eval_bundle: EvalBundle | None = None,
    initial_params: PolicyParameters | None = None,
    checkpoint_fn=None,
) -> tuple[PolicyParameters, TrainLog]:
    """Run the full training loop; deterministic given the config seed.

    ``checkpoint_fn(epoch, params)``, when given, is invoked at every
    evaluated epoch (and the final one) so callers can persist snapshots.
    Held-out epochs are evaluated when ``epoch == 1``, ``epoch == epochs``,
    or ``epoch % eval_every == 0``.
    """
    if not train_graphs:
        raise ValueError("training set must not be empty")
    seed_root = np.random.SeedSequence(cfg.seed)
    init_ss, sample_ss, shuffle_ss = seed_root.spawn(3)
    if initial_params is None:
        params = init_params(arch, np.random.default_rng(init_ss))
    else:
        initial_params.validate()
        params = initial_params
    sample_rng = np.random.default_rng(sample_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    adam = init_adam(params)
    log = TrainLog()

    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(train_graphs))
        values = []
        for graph_idx in order:
            graph = train_graphs[graph_idx]
            # Requirement omitted from the loss: constant in the parameters.
            zero_req = Requirements.uniform(graph.n_links, 0.0)
            for _ in range(cfg.dual_samples_per_graph):
                lam = sample_dual(graph.n_links, cfg, sample_rng)
                value, grads = lagrangian_value_and_grad(
                    graph, lam, zero_req, params, update_norm_stats=True
                )
                if not np.isfinite(value):
                    raise ArithmeticError(
                        f"non-finite training loss at epoch {epoch}, "
                        f"graph {graph_idx}, update {log.updates}"
                    )
                params, adam = adam_step(params, grads, adam, cfg.primal_lr)
                log.updates += 1
                values.append(value)

        eval_due = eval_bundle is not None and (
            epoch == 1 or epoch == cfg.epochs or epoch % cfg.eval_every == 0
        )
        summaries = _evaluate(params, eval_bundle) if eval_due else ()
        log.records.append(
            EpochRecord(
                epoch=epoch,
                mean_lagrangian=float(np.mean(values)),
                eval_summaries=summaries,
            )
        )
        if checkpoint_fn is not None and (eval_due or epoch == cfg.epochs):
            checkpoint_fn(epoch, params)

    return params, log
