"""Figure specifications: what to plot, from which CSV, to which image."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["FigureSpec", "load_spec", "read_table"]

KINDS = ("curve", "bars", "boxplot")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_csv: str
    output_image: str
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    labels: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}' (expected one of {KINDS})")

    def label_for(self, series: str) -> str:
        return self.labels.get(series, series)


def load_spec(path) -> FigureSpec:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: spec must be a JSON object")
    known = {"kind", "input_csv", "output_image", "title", "x_label", "y_label", "labels"}
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"{path}: unknown spec fields {sorted(unknown)}")
    for required in ("kind", "input_csv", "output_image"):
        if required not in payload:
            raise ValueError(f"{path}: missing required field '{required}'")
    return FigureSpec(**payload)


def read_table(path, required_columns: tuple[str, ...]) -> list[dict[str, str]]:
    """Read a feed CSV, failing with the missing column names."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        missing = [c for c in required_columns if c not in columns]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing} (found {columns})")
        return list(reader)
