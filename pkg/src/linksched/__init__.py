"""Constrained wireless link scheduling on conflict graphs.

Builds grid communication graphs and their link conflict graphs, trains a
dual-conditioned graph-convolutional scheduling policy by primal ascent on an
augmented Lagrangian, executes it under online dual descent subject to
per-link minimum transmission requirements, and benchmarks it against
persistence and independent-set heuristics.
"""

from .baselines import (
    BaselineConfig,
    baseline_schedule,
    exact_mis,
    greedy_mis,
    mis_random_schedule,
    p_persistent_schedule,
    resolve_collisions,
)
from .execution import (
    DualState,
    ExecConfig,
    ExecTrace,
    dual_update,
    execute,
    execute_policy,
)
from .graphs import (
    CommGraph,
    ConflictGraph,
    GraphFormatError,
    generate_comm_graph,
    graph_stats,
    line_graph,
    load_graph,
    save_graph,
    shift,
)
from .metrics import MetricsRecord, compute_metrics
from .policy import (
    AdamState,
    ArchConfig,
    PolicyParameters,
    adam_step,
    forward,
    init_adam,
    init_params,
    lagrangian_value_and_grad,
    load_params,
    save_params,
    threshold,
)
from .scheduling import (
    Requirements,
    Schedule,
    objective,
    per_step_lagrangian,
    success_indicator,
    successful_transmissions,
    time_avg_success,
    violation_level,
)
from .training import EvalBundle, EvalPoint, TrainConfig, TrainLog, sample_dual, train

__version__ = "0.1.0"
