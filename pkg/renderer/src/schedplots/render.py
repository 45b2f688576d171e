"""Render figure-feed CSVs into static images.

Three figure kinds cover the four standard plots:

* ``curve`` — mean line with a shaded standard-deviation band per series;
  rows without an epoch value are drawn as horizontal reference levels
  (baseline feeds).  Accepts both the violation feed (``delta, epoch, mean,
  std``; one series per delta) and the objective feed (an extra leading
  ``series`` column).
* ``bars`` — grouped total/successful transmission bars per delta.
* ``boxplot`` — one box of per-link violation levels per delta, y-range
  [0, 1].

No numeric transformation is applied beyond plotting; the data-preparation
helpers return exactly the values drawn so tests can compare them to the CSV.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .specs import FigureSpec, read_table

__all__ = [
    "prepare_curve_data",
    "prepare_bars_data",
    "prepare_boxplot_data",
    "render",
]


def prepare_curve_data(spec: FigureSpec) -> dict[str, dict[str, np.ndarray]]:
    """Series name -> {epochs, mean, std} for curves, {level} for horizontals."""
    rows = read_table(spec.input_csv, ("delta", "epoch", "mean", "std"))
    has_series = bool(rows) and "series" in rows[0]
    grouped: dict[str, dict[str, list]] = {}
    for row in rows:
        if has_series:
            name = f"{row['series']} (delta {row['delta']})"
        else:
            name = f"delta {row['delta']}"
        bucket = grouped.setdefault(name, {"epochs": [], "mean": [], "std": []})
        bucket["epochs"].append(row["epoch"])
        bucket["mean"].append(float(row["mean"]))
        bucket["std"].append(float(row["std"]))
    out: dict[str, dict[str, np.ndarray]] = {}
    for name, bucket in grouped.items():
        if all(e == "" for e in bucket["epochs"]):
            out[name] = {"level": np.array(bucket["mean"])}
        else:
            order = np.argsort([int(e) for e in bucket["epochs"]], kind="stable")
            out[name] = {
                "epochs": np.array([int(bucket["epochs"][i]) for i in order]),
                "mean": np.array([bucket["mean"][i] for i in order]),
                "std": np.array([bucket["std"][i] for i in order]),
            }
    return out


def prepare_bars_data(spec: FigureSpec) -> dict[str, np.ndarray]:
    rows = read_table(spec.input_csv, ("delta", "total", "successful"))
    deltas = [row["delta"] for row in rows]
    return {
        "deltas": np.array(deltas),
        "total": np.array([float(r["total"]) for r in rows]),
        "successful": np.array([float(r["successful"]) for r in rows]),
    }


def prepare_boxplot_data(spec: FigureSpec) -> dict[str, np.ndarray]:
    rows = read_table(spec.input_csv, ("delta", "violation_level"))
    grouped: dict[str, list[float]] = {}
    for row in rows:
        grouped.setdefault(row["delta"], []).append(float(row["violation_level"]))
    return {delta: np.array(vals) for delta, vals in sorted(grouped.items(), key=lambda kv: float(kv[0]))}


def _render_curve(spec: FigureSpec, ax) -> None:
    data = prepare_curve_data(spec)
    for name, series in data.items():
        label = spec.label_for(name)
        if "level" in series:
            for level in series["level"]:
                ax.axhline(level, linestyle="--", linewidth=1.2, label=label)
        else:
            (line,) = ax.plot(series["epochs"], series["mean"], label=label)
            ax.fill_between(
                series["epochs"],
                series["mean"] - series["std"],
                series["mean"] + series["std"],
                alpha=0.25,
                color=line.get_color(),
            )
    ax.set_xlabel(spec.x_label or "epoch")
    ax.legend(fontsize=8)


def _render_bars(spec: FigureSpec, ax) -> None:
    data = prepare_bars_data(spec)
    x = np.arange(len(data["deltas"]))
    width = 0.38
    ax.bar(x - width / 2, data["total"], width, label=spec.label_for("total"))
    ax.bar(x + width / 2, data["successful"], width, label=spec.label_for("successful"))
    ax.set_xticks(x)
    ax.set_xticklabels(data["deltas"])
    ax.set_xlabel(spec.x_label or "requirement")
    ax.legend(fontsize=8)


def _render_boxplot(spec: FigureSpec, ax) -> None:
    data = prepare_boxplot_data(spec)
    groups = [vals for vals in data.values()]
    ax.boxplot(groups, tick_labels=list(data.keys()))
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(spec.x_label or "requirement")


def render(spec: FigureSpec):
    """Render one figure and write the image; returns the matplotlib figure."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    if spec.kind == "curve":
        _render_curve(spec, ax)
    elif spec.kind == "bars":
        _render_bars(spec, ax)
    else:
        _render_boxplot(spec, ax)
    if spec.title:
        ax.set_title(spec.title)
    if spec.y_label:
        ax.set_ylabel(spec.y_label)
    fig.tight_layout()
    out = Path(spec.output_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    return fig
