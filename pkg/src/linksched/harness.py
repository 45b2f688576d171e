"""Experiment orchestration and persistence.

Fixed CSV schemas (header order is part of the contract):

* ``train_log.csv`` — ``epoch, mean_lagrangian`` then, per requirement level
  d, ``mean_violation@d, objective_fraction@d`` (blank on epochs without a
  held-out evaluation).
* ``metrics.csv`` / ``baseline_*.csv`` — ``graph_id, delta,
  objective_fraction, mean_violation, total_tx, successful_tx``; one row per
  (graph, delta) plus an aggregate row with ``graph_id=all`` per delta whose
  numeric columns are the arithmetic means of the per-graph rows.
* ``violations.csv`` — ``graph_id, delta, link_id, violation_level`` for
  violating links only.
* trace files per (graph, delta) — schedules ``t, link, scheduled,
  successful``; duals ``t, link, value`` (T+1 dual rows); metrics JSON.

``cmd_report`` consolidates runs into four figure feeds: violation and
objective curves versus epoch (mean/std across runs, window-5 trailing
average), baseline levels folded into the objective feed, total-versus-
successful transmissions per delta, and per-link violation levels per delta.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, baseline_schedule
from .execution import ExecConfig, ExecTrace, execute
from .graphs import (
    ConflictGraph,
    conflict_degrees,
    generate_comm_graph,
    line_graph,
    load_graph,
    save_graph,
)
from .metrics import MetricsRecord, compute_metrics
from .policy import ArchConfig, PolicyParameters, load_params, save_params
from .scheduling import Requirements, Schedule, successful_transmissions
from .training import EvalBundle, EvalPoint, TrainConfig, TrainLog, train

__all__ = [
    "RunConfig",
    "load_run_config",
    "cmd_gen_data",
    "cmd_train",
    "cmd_eval",
    "cmd_baseline",
    "cmd_report",
    "read_csv_rows",
    "METRICS_HEADER",
    "VIOLATIONS_HEADER",
]

METRICS_HEADER = [
    "graph_id",
    "delta",
    "objective_fraction",
    "mean_violation",
    "total_tx",
    "successful_tx",
]
VIOLATIONS_HEADER = ["graph_id", "delta", "link_id", "violation_level"]
AGGREGATE_ID = "all"

_DEFAULT_DELTAS = (0.1,)
_DEFAULT_RESILIENCE = {0.1: 0.05, 0.125: 0.1, 0.15: 0.1}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv_rows(path) -> tuple[list[str], list[dict[str, str]]]:
    """Parse a harness CSV back into its header and string-valued rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows


def _delta_key(delta: float) -> str:
    return _fmt(float(delta))


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment consumes, loadable from a single JSON file."""

    seed: int = 0
    out_dir: str = "runs/default"
    dataset_dir: str = "data"
    arch: ArchConfig = field(default_factory=ArchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    deltas: tuple[float, ...] = _DEFAULT_DELTAS
    resilience: dict[float, float] = field(default_factory=lambda: dict(_DEFAULT_RESILIENCE))
    exec_steps: int = 200
    eta_dual: float = 2.0
    dual_signal: str = "relaxed"
    norm_stats: str = "batch"
    eval_during_training: bool = True

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(
            self, "resilience", {float(k): float(v) for k, v in self.resilience.items()}
        )
        for delta in self.deltas:
            if delta <= 0:
                raise ValueError(f"requirement level must be positive, got {delta}")
            r = self.resilience_for(delta)
            if r >= delta:
                raise ValueError(
                    f"resilience {r} must be below the requirement {delta}"
                )

    def resilience_for(self, delta: float) -> float:
        return self.resilience.get(float(delta), 0.0)

    def exec_config_for(self, delta: float) -> ExecConfig:
        return ExecConfig(
            steps=self.exec_steps,
            eta_dual=self.eta_dual,
            resilience=self.resilience_for(delta),
            dual_signal=self.dual_signal,
            norm_stats=self.norm_stats,
        )


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a JSON file plus override values.

    Override keys mirror the JSON structure: top-level scalars, plus the
    nested ``arch`` and ``train`` sections.
    """
    payload: dict = {}
    if path is not None:
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise ValueError(f"{path}: config must be a JSON object")
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("arch", "train"):
                section = dict(payload.get(key, {}))
                section.update({k: v for k, v in value.items() if v is not None})
                payload[key] = section
            else:
                payload[key] = value

    known = {
        "seed",
        "out_dir",
        "dataset_dir",
        "arch",
        "train",
        "deltas",
        "resilience",
        "exec_steps",
        "eta_dual",
        "dual_signal",
        "norm_stats",
        "eval_during_training",
    }
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")

    kwargs = dict(payload)
    if "arch" in kwargs:
        kwargs["arch"] = ArchConfig(**kwargs["arch"])
    if "train" in kwargs:
        kwargs["train"] = TrainConfig(**kwargs["train"])
    if "resilience" in kwargs:
        kwargs["resilience"] = {float(k): float(v) for k, v in kwargs["resilience"].items()}
    if "deltas" in kwargs:
        kwargs["deltas"] = tuple(kwargs["deltas"])
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


def cmd_gen_data(
    count_train: int,
    count_test: int,
    n_min: int,
    n_max: int,
    seed: int,
    out_dir,
    radius_factor: float = 1.2,
) -> dict:
    """Generate communication/conflict graph pairs and a stats manifest."""
    if count_train < 1 or count_test < 1:
        raise ValueError("counts must be >= 1")
    if not 2 <= n_min <= n_max:
        raise ValueError(f"invalid node range [{n_min}, {n_max}]")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest = {
        "seed": seed,
        "n_range": [n_min, n_max],
        "radius_factor": radius_factor,
        "train": [],
        "test": [],
        "graphs": {},
    }
    for split, count in (("train", count_train), ("test", count_test)):
        for i in range(count):
            graph_id = f"{split}_{i:03d}"
            n = int(rng.integers(n_min, n_max + 1))
            gseed = int(rng.integers(0, 2**31 - 1))
            comm = generate_comm_graph(n, radius_factor, gseed)
            conflict = line_graph(comm)
            comm_file = f"comm_{graph_id}.json"
            conflict_file = f"conflict_{graph_id}.json"
            save_graph(comm, out_dir / comm_file)
            save_graph(conflict, out_dir / conflict_file)
            manifest[split].append(graph_id)
            manifest["graphs"][graph_id] = {
                "n_nodes": n,
                "seed": gseed,
                "k": conflict.n_links,
                "mean_comm_degree": float(comm.degrees().mean()),
                "mean_conflict_degree": float(conflict_degrees(conflict).mean()),
                "comm_file": comm_file,
                "conflict_file": conflict_file,
            }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_dataset(dataset_dir, split: str) -> list[tuple[str, ConflictGraph]]:
    dataset_dir = Path(dataset_dir)
    manifest_path = dataset_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no dataset manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if split not in ("train", "test"):
        raise ValueError(f"unknown split '{split}'")
    out = []
    for graph_id in manifest[split]:
        info = manifest["graphs"][graph_id]
        graph = load_graph(dataset_dir / info["conflict_file"])
        out.append((graph_id, graph))
    return out


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _train_log_header(deltas) -> list[str]:
    header = ["epoch", "mean_lagrangian"]
    for delta in deltas:
        key = _delta_key(delta)
        header.extend([f"mean_violation@{key}", f"objective_fraction@{key}"])
    return header


def _write_train_log(path: Path, log: TrainLog, deltas) -> None:
    rows = []
    for rec in log.records:
        row: list = [rec.epoch, rec.mean_lagrangian]
        by_delta = {s.delta: s for s in rec.eval_summaries}
        for delta in deltas:
            summary = by_delta.get(float(delta))
            if summary is None:
                row.extend([None, None])
            else:
                row.extend([summary.mean_violation, summary.objective_fraction])
        rows.append(row)
    _write_csv(path, _train_log_header(deltas), rows)


def cmd_train(cfg: RunConfig) -> dict:
    """Train on the dataset's train split; write checkpoints and the epoch log."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_graphs = [g for _, g in load_dataset(cfg.dataset_dir, "train")]

    bundle = None
    if cfg.eval_during_training:
        test_set = load_dataset(cfg.dataset_dir, "test")
        bundle = EvalBundle(
            graphs=tuple(g for _, g in test_set),
            points=tuple(
                EvalPoint(delta=d, exec_config=cfg.exec_config_for(d)) for d in cfg.deltas
            ),
            graph_ids=tuple(gid for gid, _ in test_set),
        )

    train_cfg = replace(cfg.train, seed=cfg.train.seed if cfg.train.seed else cfg.seed)
    checkpoints: list[str] = []

    def checkpoint_fn(epoch: int, params: PolicyParameters) -> None:
        path = out_dir / f"checkpoint_epoch_{epoch:03d}.npz"
        save_params(params, path)
        checkpoints.append(path.name)

    params, log = train(
        train_graphs, train_cfg, cfg.arch, eval_bundle=bundle, checkpoint_fn=checkpoint_fn
    )
    final_path = out_dir / "checkpoint_final.npz"
    save_params(params, final_path)
    _write_train_log(out_dir / "train_log.csv", log, cfg.deltas)
    (out_dir / "run_config.json").write_text(
        json.dumps(
            {
                "seed": cfg.seed,
                "out_dir": cfg.out_dir,
                "dataset_dir": cfg.dataset_dir,
                "arch": asdict(cfg.arch),
                "train": asdict(train_cfg),
                "deltas": list(cfg.deltas),
                "resilience": {_delta_key(k): v for k, v in cfg.resilience.items()},
                "exec_steps": cfg.exec_steps,
                "eta_dual": cfg.eta_dual,
                "dual_signal": cfg.dual_signal,
                "norm_stats": cfg.norm_stats,
            },
            indent=2,
        )
        + "\n"
    )
    return {
        "final_checkpoint": str(final_path),
        "train_log": str(out_dir / "train_log.csv"),
        "checkpoints": checkpoints,
        "updates": log.updates,
    }


# ---------------------------------------------------------------------------
# Evaluation and baselines
# ---------------------------------------------------------------------------


def _metrics_row(rec: MetricsRecord) -> list:
    return [
        rec.graph_id,
        rec.delta,
        rec.objective_fraction,
        rec.mean_violation,
        rec.total_transmissions,
        rec.successful_transmissions,
    ]


def _aggregate_row(delta: float, records: list[MetricsRecord]) -> list:
    return [
        AGGREGATE_ID,
        float(delta),
        float(np.mean([r.objective_fraction for r in records])),
        float(np.mean([r.mean_violation for r in records])),
        float(np.mean([r.total_transmissions for r in records])),
        float(np.mean([r.successful_transmissions for r in records])),
    ]


def _violation_rows(records: list[MetricsRecord]) -> list[list]:
    rows = []
    for rec in records:
        for link, level in zip(rec.violating_links, rec.violation_fractions):
            rows.append([rec.graph_id, rec.delta, link, level])
    return rows


def _write_trace(out_dir: Path, graph_id: str, delta: float, trace: ExecTrace, graph) -> None:
    key = _delta_key(delta)
    sched_rows = []
    for t, sched in enumerate(trace.schedules):
        succ = successful_transmissions(graph, sched)
        for link in range(graph.n_links):
            sched_rows.append([t, link, int(sched.values[link]), int(succ[link])])
    _write_csv(
        out_dir / f"schedules_{graph_id}_delta{key}.csv",
        ["t", "link", "scheduled", "successful"],
        sched_rows,
    )
    lam_rows = []
    for t, lam in enumerate(trace.lambda_trajectory):
        for link in range(graph.n_links):
            lam_rows.append([t, link, lam[link]])
    _write_csv(out_dir / f"lambda_{graph_id}_delta{key}.csv", ["t", "link", "value"], lam_rows)
    (out_dir / f"metrics_{graph_id}_delta{key}.json").write_text(
        json.dumps(asdict(trace.metrics), indent=2) + "\n"
    )


def cmd_eval(
    checkpoint,
    dataset_dir,
    deltas,
    out_dir,
    split: str = "test",
    exec_steps: int = 200,
    eta_dual: float = 2.0,
    resilience: dict[float, float] | float | None = None,
    dual_signal: str = "relaxed",
    norm_stats: str = "batch",
    write_traces: bool = True,
    expected_arch: ArchConfig | None = None,
) -> dict:
    """Execute a checkpoint on a dataset split over a grid of requirements."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = load_params(checkpoint, expected_config=expected_arch)
    graphs = load_dataset(dataset_dir, split)
    if resilience is None:
        resilience = dict(_DEFAULT_RESILIENCE)

    def resilience_for(delta: float) -> float:
        if isinstance(resilience, dict):
            return float(resilience.get(float(delta), 0.0))
        return float(resilience)

    metric_rows: list[list] = []
    violation_rows: list[list] = []
    traces_dir = out_dir / "traces"
    for delta in deltas:
        exec_cfg = ExecConfig(
            steps=exec_steps,
            eta_dual=eta_dual,
            resilience=resilience_for(delta),
            dual_signal=dual_signal,
            norm_stats=norm_stats,
        )
        records = []
        for graph_id, graph in graphs:
            req = Requirements.uniform(graph.n_links, delta)
            trace = execute(graph, params, req, exec_cfg, graph_id=graph_id)
            records.append(trace.metrics)
            metric_rows.append(_metrics_row(trace.metrics))
            if write_traces:
                _write_trace(traces_dir, graph_id, delta, trace, graph)
        metric_rows.append(_aggregate_row(delta, records))
        violation_rows.extend(_violation_rows(records))
    _write_csv(out_dir / "metrics.csv", METRICS_HEADER, metric_rows)
    _write_csv(out_dir / "violations.csv", VIOLATIONS_HEADER, violation_rows)
    return {
        "metrics": str(out_dir / "metrics.csv"),
        "violations": str(out_dir / "violations.csv"),
    }


def cmd_baseline(
    kind: str,
    collision_avoidance: bool,
    dataset_dir,
    deltas,
    steps: int,
    seed: int,
    out_dir,
    split: str = "test",
) -> dict:
    """Run one heuristic baseline over the dataset split and metric grid."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graphs = load_dataset(dataset_dir, split)
    variant = "ca" if collision_avoidance else "naive"
    rows: list[list] = []
    for delta in deltas:
        records = []
        for idx, (graph_id, graph) in enumerate(graphs):
            cfg = BaselineConfig(
                kind=kind,
                collision_avoidance=collision_avoidance,
                steps=steps,
                seed=seed + 1000 * idx,
            )
            schedules = baseline_schedule(graph, cfg)
            rec = compute_metrics(graph, schedules, float(delta), graph_id=graph_id)
            records.append(rec)
            rows.append(_metrics_row(rec))
        rows.append(_aggregate_row(delta, records))
    path = out_dir / f"baseline_{kind}_{variant}.csv"
    _write_csv(path, METRICS_HEADER, rows)
    return {"metrics": str(path)}


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------


def running_average(values, window: int = 5) -> np.ndarray:
    """Trailing running mean; the window shrinks at the start of the series."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for i in range(len(values)):
        out[i] = values[max(0, i - window + 1) : i + 1].mean()
    return out


def _parse_train_log(path: Path) -> tuple[list[int], dict[str, dict[int, float]]]:
    header, rows = read_csv_rows(path)
    epochs = [int(r["epoch"]) for r in rows]
    series: dict[str, dict[int, float]] = {}
    for column in header:
        if column in ("epoch", "mean_lagrangian"):
            continue
        series[column] = {
            int(r["epoch"]): float(r[column]) for r in rows if r[column] != ""
        }
    return epochs, series


def _curve_feed(
    logs: list[tuple[list[int], dict[str, dict[int, float]]]],
    metric: str,
    window: int,
) -> list[list]:
    deltas = sorted(
        {
            col.split("@", 1)[1]
            for _, series in logs
            for col in series
            if col.startswith(f"{metric}@")
        },
        key=float,
    )
    rows: list[list] = []
    for delta in deltas:
        col = f"{metric}@{delta}"
        per_run: list[dict[int, float]] = [series.get(col, {}) for _, series in logs]
        epochs = sorted(set().union(*[set(d) for d in per_run]))
        epochs = [e for e in epochs if all(e in d for d in per_run)]
        if not epochs:
            continue
        data = np.array([[d[e] for e in epochs] for d in per_run])
        mean = running_average(data.mean(axis=0), window)
        std = running_average(data.std(axis=0), window)
        for i, epoch in enumerate(epochs):
            rows.append([float(delta), epoch, float(mean[i]), float(std[i])])
    return rows


def _aggregate_metrics(path: Path) -> dict[str, dict[str, float]]:
    """Aggregate rows of a metrics CSV, keyed by delta string."""
    _, rows = read_csv_rows(path)
    out = {}
    for row in rows:
        if row["graph_id"] == AGGREGATE_ID:
            out[row["delta"]] = {
                "objective_fraction": float(row["objective_fraction"]),
                "mean_violation": float(row["mean_violation"]),
                "total_tx": float(row["total_tx"]),
                "successful_tx": float(row["successful_tx"]),
            }
    return out


def cmd_report(inputs_dir, out_dir, window: int = 5) -> dict:
    """Consolidate training logs, evaluation metrics, and baseline metrics
    found under ``inputs_dir`` into the four figure-feed CSVs."""
    inputs_dir = Path(inputs_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    log_paths = sorted(inputs_dir.glob("**/train_log.csv"))
    if not log_paths:
        raise FileNotFoundError(
            f"no training logs found under {inputs_dir} (expected train_log.csv)"
        )
    logs = [_parse_train_log(p) for p in log_paths]

    violation_rows = _curve_feed(logs, "mean_violation", window)
    _write_csv(
        out_dir / "violation_vs_epoch.csv",
        ["delta", "epoch", "mean", "std"],
        violation_rows,
    )

    objective_rows = [["policy", *row] for row in _curve_feed(logs, "objective_fraction", window)]
    for baseline_path in sorted(inputs_dir.glob("**/baseline_*.csv")):
        label = baseline_path.stem.removeprefix("baseline_")
        for delta, agg in sorted(_aggregate_metrics(baseline_path).items(), key=lambda kv: float(kv[0])):
            objective_rows.append([label, float(delta), None, agg["objective_fraction"], 0.0])
    _write_csv(
        out_dir / "objective_vs_epoch.csv",
        ["series", "delta", "epoch", "mean", "std"],
        objective_rows,
    )

    eval_paths = sorted(p for p in inputs_dir.glob("**/metrics.csv"))
    if not eval_paths:
        raise FileNotFoundError(
            f"no evaluation metrics found under {inputs_dir} (expected metrics.csv)"
        )
    tx_acc: dict[str, list[tuple[float, float]]] = {}
    for path in eval_paths:
        for delta, agg in _aggregate_metrics(path).items():
            tx_acc.setdefault(delta, []).append((agg["total_tx"], agg["successful_tx"]))
    tx_rows = []
    for delta in sorted(tx_acc, key=float):
        totals = np.array(tx_acc[delta])
        total, successful = totals.mean(axis=0)
        tx_rows.append([float(delta), float(total), float(successful), float(successful / total) if total else 0.0])
    _write_csv(
        out_dir / "transmissions_per_delta.csv",
        ["delta", "total", "successful", "ratio"],
        tx_rows,
    )

    violation_level_rows: list[list] = []
    for path in sorted(inputs_dir.glob("**/violations.csv")):
        _, rows = read_csv_rows(path)
        for row in rows:
            violation_level_rows.append(
                [float(row["delta"]), row["graph_id"], int(row["link_id"]), float(row["violation_level"])]
            )
    violation_level_rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(
        out_dir / "violation_levels.csv",
        ["delta", "graph_id", "link_id", "violation_level"],
        violation_level_rows,
    )

    return {
        "violation_vs_epoch": str(out_dir / "violation_vs_epoch.csv"),
        "objective_vs_epoch": str(out_dir / "objective_vs_epoch.csv"),
        "transmissions_per_delta": str(out_dir / "transmissions_per_delta.csv"),
        "violation_levels": str(out_dir / "violation_levels.csv"),
    }
