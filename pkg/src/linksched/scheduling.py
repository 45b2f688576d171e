"""Scheduling semantics shared by the learned policy, baselines, and tests.

A schedule is a per-link decision vector; a scheduled link transmits
successfully when none of its conflict-graph neighbors is scheduled at the
same step.  All formulas are closed-form functions of the conflict adjacency
matrix and accept relaxed (fractional) schedules with the same arithmetic,
the ramp ``[x]_+ = max(x, 0)`` playing the role of the success clamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ConflictGraph

__all__ = [
    "BINARY",
    "RELAXED",
    "Schedule",
    "Requirements",
    "success_indicator",
    "successful_transmissions",
    "objective",
    "time_avg_success",
    "per_step_lagrangian",
    "violation_level",
]

BINARY = "binary"
RELAXED = "relaxed"


@dataclass(frozen=True)
class Schedule:
    """Per-link decision vector; binary entries in {0,1}, relaxed in [0,1]."""

    values: np.ndarray
    mode: str = BINARY

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        if vals.ndim != 1:
            raise ValueError(f"schedule must be a vector, got shape {vals.shape}")
        if self.mode == BINARY:
            if not np.all((vals == 0.0) | (vals == 1.0)):
                raise ValueError("binary schedule entries must be 0 or 1")
        elif self.mode == RELAXED:
            if np.any(vals < 0.0) or np.any(vals > 1.0):
                raise ValueError("relaxed schedule entries must lie in [0, 1]")
        else:
            raise ValueError(f"unknown schedule mode '{self.mode}'")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def binary(cls, values) -> "Schedule":
        return cls(values=np.asarray(values, dtype=float), mode=BINARY)

    @classmethod
    def relaxed(cls, values) -> "Schedule":
        return cls(values=np.asarray(values, dtype=float), mode=RELAXED)


@dataclass(frozen=True)
class Requirements:
    """Per-link minimum time-averaged successful-transmission rates."""

    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float).copy()
        if d.ndim != 1:
            raise ValueError(f"delta must be a vector, got shape {d.shape}")
        if np.any(d < 0.0):
            raise ValueError("delta entries must be nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "delta", d)

    @classmethod
    def uniform(cls, n_links: int, value: float) -> "Requirements":
        return cls(delta=np.full(n_links, float(value)))


def _values(s) -> np.ndarray:
    if isinstance(s, Schedule):
        return s.values
    return np.asarray(s, dtype=float)


def _check_length(graph: ConflictGraph, v: np.ndarray, what: str) -> None:
    if v.shape != (graph.n_links,):
        raise ValueError(f"{what} length {v.shape} does not match K={graph.n_links}")


def success_indicator(graph: ConflictGraph, s) -> np.ndarray:
    """Entrywise ramp of (1 - A s): 1 on links free of scheduled conflicts."""
    v = _values(s)
    _check_length(graph, v, "schedule")
    return np.maximum(1.0 - graph.adjacency @ v, 0.0)


def successful_transmissions(graph: ConflictGraph, s) -> np.ndarray:
    """Per-link product of the decision and its success indicator."""
    v = _values(s)
    return v * success_indicator(graph, v)


def objective(graph: ConflictGraph, s) -> float:
    """Total successful transmissions in one step; for binary schedules the
    count of scheduled links with no scheduled conflicting neighbor."""
    v = _values(s)
    return float(v @ success_indicator(graph, v))


def time_avg_success(graph: ConflictGraph, schedules) -> np.ndarray:
    """Per-link successful-transmission rate averaged over a horizon."""
    schedules = list(schedules)
    if not schedules:
        raise ValueError("cannot average an empty schedule sequence")
    total = np.zeros(graph.n_links)
    for s in schedules:
        total += successful_transmissions(graph, s)
    return total / len(schedules)


def per_step_lagrangian(graph: ConflictGraph, s, lam, req: Requirements) -> float:
    """One step of the constrained objective: successes plus the dual-weighted
    constraint slack."""
    v = _values(s)
    lam = np.asarray(lam, dtype=float)
    _check_length(graph, lam, "dual vector")
    _check_length(graph, req.delta, "requirements")
    if np.any(lam < 0.0):
        raise ValueError("dual vector entries must be nonnegative")
    succ = successful_transmissions(graph, v)
    return float(v @ success_indicator(graph, v) + lam @ (succ - req.delta))


def violation_level(avg_success, req: Requirements) -> np.ndarray:
    """Normalized shortfall (delta - achieved) / delta per link.

    1 means no successful transmissions at all; links with a zero requirement
    report 0 (the constraint is vacuous).
    """
    avg = np.asarray(avg_success, dtype=float)
    delta = req.delta
    if avg.shape != delta.shape:
        raise ValueError(f"avg_success shape {avg.shape} != delta shape {delta.shape}")
    out = np.zeros_like(delta)
    active = delta > 0
    out[active] = (delta[active] - avg[active]) / delta[active]
    return out
