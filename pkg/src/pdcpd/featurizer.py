"""Snapshot features: fixed-width windows over an event log."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ParseError
from .simkit import EventLog, ResourceSchedule

FEATURE_NAMES = (
    "num_in_system",
    "num_in_queue",
    "utilization",
    "busy_time",
    "idle_time",
    "completions",
)


@dataclass
class FeatureSeries:
    interval_min: float
    values: np.ndarray
    feature_names: list = field(default_factory=lambda: list(FEATURE_NAMES))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.ndim != 2:
            raise ValueError("values must be a T x m matrix")
        self.feature_names = list(self.feature_names)
        if len(self.feature_names) != self.values.shape[1]:
            raise ValueError(
                f"{len(self.feature_names)} names for {self.values.shape[1]} feature columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_index", *self.feature_names])
            for t, row in enumerate(self.values):
                w.writerow([t, *(repr(float(v)) for v in row)])

    @classmethod
    def read_csv(cls, path, interval_min: float = 10.0) -> "FeatureSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:1] != ["t_index"]:
            raise ParseError("expected header starting with t_index", path, 1)
        names = rows[0][1:]
        values = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise ParseError(f"expected {len(names) + 1} columns, got {len(row)}", path, lineno)
            try:
                if int(row[0]) != len(values):
                    raise ParseError(f"t_index {row[0]} out of sequence", path, lineno)
                values.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
        return cls(interval_min, np.asarray(values).reshape(len(values), len(names)), names)


def _ramp_sum(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_i max(0, x - points_i)`` for every ``x``."""
    p = np.sort(points)
    csum = np.concatenate(([0.0], np.cumsum(p)))
    k = np.searchsorted(p, x, side="right")
    return k * x - csum[k]


def _overlap(lo: np.ndarray, hi: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Total length of the intervals ``[lo_i, hi_i)`` falling in each window."""
    if lo.size == 0:
        return np.zeros(edges.size - 1)
    # cumulative occupied time up to x is a difference of two ramp sums
    covered = _ramp_sum(lo, edges) - _ramp_sum(hi, edges)
    return np.clip(np.diff(covered), 0.0, None)


def _peak_concurrency(start: np.ndarray, end: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Maximum number simultaneously in service within each window."""
    times = np.concatenate((start, end))
    steps = np.concatenate((np.ones(start.size), -np.ones(end.size)))
    # ends sort before starts at equal times
    order = np.lexsort((steps, times))
    times, level = times[order], np.cumsum(steps[order])
    peak = np.zeros(edges.size - 1)
    for j in range(edges.size - 1):
        k0 = np.searchsorted(times, edges[j], side="right")
        k1 = np.searchsorted(times, edges[j + 1], side="left")
        current = level[k0 - 1] if k0 > 0 else 0.0
        peak[j] = max(current, level[k0:k1].max(initial=0.0))
    return peak


def snapshot_features(
    log: EventLog,
    interval_min: float = 10.0,
    schedule: ResourceSchedule | None = None,
    capacity: str = "roster",
) -> FeatureSeries:
    """Six per-window features: time-average number in system and in queue,
    utilization, busy server-minutes, idle server-minutes, completions.

    Scheduled capacity comes from ``schedule`` (falls back to ``log.schedule``).
    Windows straddling a change point use the time-weighted capacity. With no
    roster at all, each window's capacity is taken as its peak observed
    concurrency. Busy time carried over a capacity drop can exceed the roster;
    utilization is then capped at 1 and idle time at 0.
    """
    horizon = float(log.horizon_min)
    n_windows = horizon / interval_min
    if interval_min <= 0 or not math.isclose(n_windows, round(n_windows)):
        raise ConfigurationError(
            f"horizon {horizon} is not divisible by interval {interval_min}"
        )
    n_windows = int(round(n_windows))
    edges = np.arange(n_windows + 1) * float(interval_min)
    edges[-1] = horizon

    _, arr, start, end = log.entity_table()
    end_or_h = np.where(np.isnan(end), horizon, end)
    start_or_h = np.where(np.isnan(start), horizon, start)
    started = ~np.isnan(start)

    in_system = _overlap(arr, end_or_h, edges) / interval_min
    in_queue = _overlap(arr, start_or_h, edges) / interval_min
    busy = _overlap(start[started], end_or_h[started], edges)
    done = end[~np.isnan(end)]
    completions = np.histogram(done, bins=edges)[0].astype(float)

    if capacity not in ("roster", "observed"):
        raise ConfigurationError(f"unknown capacity mode {capacity!r}")
    roster = schedule if schedule is not None else log.schedule
    if capacity == "roster" and roster is not None:
        if not math.isclose(roster.horizon_min, horizon):
            raise ConfigurationError("schedule horizon does not match the log")
        capacity = roster.capacity_integral(edges)
    else:
        capacity = _peak_concurrency(start[started], end_or_h[started], edges) * interval_min
    with np.errstate(invalid="ignore", divide="ignore"):
        utilization = np.where(capacity > 0, np.minimum(busy / capacity, 1.0), 0.0)
    idle = np.clip(capacity - busy, 0.0, None)

    values = np.column_stack((in_system, in_queue, utilization, busy, idle, completions))
    return FeatureSeries(float(interval_min), values, list(FEATURE_NAMES))


def average_series(series: Sequence[FeatureSeries]) -> FeatureSeries:
    if not series:
        raise ValueError("no series to average")
    first = series[0]
    for s in series[1:]:
        if s.values.shape != first.values.shape or s.interval_min != first.interval_min:
            raise ValueError(
                f"shape mismatch: {s.values.shape}@{s.interval_min} vs "
                f"{first.values.shape}@{first.interval_min}"
            )
    values = np.mean([s.values for s in series], axis=0)
    return FeatureSeries(first.interval_min, values, list(first.feature_names))
