"""Offline change point detection on (multivariate) feature series.

Segments are half-open on the interval grid: a change point ``t`` means the new
regime starts at index ``t``. Multivariate series are z-normalized per column
(whole-series mean/std) and per-column segment costs are summed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

VAR_FLOOR = 1e-12
STATISTICS = ("mean", "stddev")


@dataclass(frozen=True)
class ChangePointSet:
    taus: tuple
    levels: tuple | None = None
    objective: float | None = None

    def __post_init__(self):
        taus = tuple(self.taus)
        object.__setattr__(self, "taus", taus)
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"change points must be strictly increasing: {taus}")
        if self.levels is not None:
            levels = tuple(int(v) for v in self.levels)
            object.__setattr__(self, "levels", levels)
            if len(levels) != len(taus) + 1:
                raise ValueError("need one level per segment")

    def __len__(self):
        return len(self.taus)

    def __iter__(self):
        return iter(self.taus)

    def times(self, interval_min: float) -> tuple:
        return tuple(float(t) * interval_min for t in self.taus)

    def write_csv(self, path, interval_min: float):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cp_index", "cp_time_min"])
            for t in self.taus:
                w.writerow([t, f"{float(t) * interval_min:.6f}"])


def _check_range(x, a, b, min_len):
    x = np.asarray(x, dtype=float)
    if not (0 <= a <= b < x.size):
        raise ValueError(f"invalid segment [{a}, {b}] for series of length {x.size}")
    if b - a + 1 < min_len:
        raise ValueError(f"segment [{a}, {b}] shorter than {min_len}")
    return x[a : b + 1]


def cost_mean(x, a: int, b: int) -> float:
    """Residual sum of squares about the segment mean on ``x[a..b]`` (inclusive)."""
    seg = _check_range(x, a, b, 1)
    return float(seg.size * seg.var())


def cost_var(x, a: int, b: int, var_floor: float = VAR_FLOOR) -> float:
    """Segment length times log population variance on ``x[a..b]`` (inclusive)."""
    seg = _check_range(x, a, b, 2)
    return float(seg.size * math.log(max(seg.var(), var_floor)))


def _as_matrix(series) -> np.ndarray:
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("series must be 1-D or T x m")
    return x


def normalize_columns(x: np.ndarray) -> np.ndarray:
    """Per-column z-score; constant columns are only centred."""
    x = _as_matrix(x)
    sd = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def min_segment_length(statistic: str) -> int:
    if statistic == "mean":
        return 1
    if statistic == "stddev":
        return 2
    raise ConfigurationError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")


def segment_cost_matrix(series, statistic: str = "mean") -> np.ndarray:
    """``C[a, e]`` = cost of the half-open segment ``[a, e)`` summed over columns.

    Entries with ``e - a`` below the statistic's minimum length are ``inf``.
    """
    min_len = min_segment_length(statistic)
    x = normalize_columns(series)
    T = x.shape[0]
    # residual sums by Welford updates over segment length, all starts at once;
    # prefix-sum differences lose the small variances that the log cost amplifies
    rss = np.zeros((T + 1, T + 1, x.shape[1]))
    mean = x.copy()
    m2 = np.zeros_like(x)
    for L in range(2, T + 1):
        k = T - L + 1
        new = x[L - 1 :]
        delta = new - mean[:k]
        mean = mean[:k] + delta / L
        m2 = m2[:k] + delta * (new - mean)
        rss[np.arange(k), np.arange(k) + L] = m2
    n = np.arange(T + 1)[None, :] - np.arange(T + 1)[:, None]
    valid = n >= min_len
    safe_n = np.where(valid, n, 1)
    rss = np.clip(rss, 0.0, None)
    if statistic == "mean":
        cost = rss.sum(axis=2)
    else:
        var = np.maximum(rss / safe_n[:, :, None], VAR_FLOOR)
        cost = (safe_n[:, :, None] * np.log(var)).sum(axis=2)
    return np.where(valid, cost, np.inf)


def segmentation_cost(series, taus: Sequence[int], statistic: str = "mean") -> float:
    """Direct (non-prefix-sum) evaluation of the summed segment cost for ``taus``."""
    x = normalize_columns(series)
    fn = cost_mean if statistic == "mean" else cost_var
    bounds = [0, *[int(t) for t in taus], x.shape[0]]
    return sum(fn(x[:, j], a, e - 1) for a, e in zip(bounds, bounds[1:]) for j in range(x.shape[1]))


def detect_single(series, statistic: str = "mean") -> int:
    """Best single split; ties go to the smallest index."""
    C = segment_cost_matrix(series, statistic)
    T = C.shape[0] - 1
    if T < 4:
        raise ValueError(f"need at least 4 points, got {T}")
    t = np.arange(1, T)
    z = C[0, t] + C[t, T]
    return int(t[np.argmin(z)])


def default_beta(n_features: int, n_intervals: int) -> float:
    return 2.0 * n_features * math.log(n_intervals)


def detect_multi(
    series,
    statistic: str = "mean",
    beta: float | str = "auto",
    max_cp: int = 5,
    n_cps: int | None = None,
) -> ChangePointSet:
    """Exact penalized segmentation by dynamic programming over (end, #change points).

    Minimizes ``cost + beta * N`` over ``N <= max_cp``; with ``n_cps`` the count is
    fixed and the penalty is dropped from the reported objective. Ties resolve to fewer change points, then
    to earlier positions.
    """
    x = _as_matrix(series)
    T, m = x.shape
    if beta == "auto":
        beta = default_beta(m, T)
    beta = float(beta)
    if beta < 0 or max_cp < 0:
        raise ValueError("beta and max_cp must be non-negative")
    min_len = min_segment_length(statistic)
    feasible = T // min_len - 1
    if n_cps is not None:
        if n_cps < 0 or n_cps > feasible:
            raise ValueError(f"cannot place {n_cps} change points in {T} points")
        max_cp = n_cps
    max_cp = min(max_cp, feasible)

    C = segment_cost_matrix(x, statistic)
    F = np.full((max_cp + 1, T + 1), np.inf)
    back = np.zeros((max_cp + 1, T + 1), dtype=int)
    F[0] = C[0]
    for k in range(1, max_cp + 1):
        total = F[k - 1][:, None] + C
        back[k] = np.argmin(total, axis=0)
        F[k] = total[back[k], np.arange(T + 1)]

    if n_cps is not None:
        best_n, beta = n_cps, 0.0
    else:
        scores = F[:, T] + beta * np.arange(max_cp + 1)
        best_n = int(np.argmin(scores))
    taus = []
    e = T
    for k in range(best_n, 0, -1):
        e = int(back[k, e])
        taus.append(e)
    taus.reverse()
    return ChangePointSet(tuple(taus), objective=float(F[best_n, T] + beta * best_n))


def conciliate(cps: Sequence[ChangePointSet], mode: str = "median") -> ChangePointSet:
    """Element-wise median (or mean) of equally sized change point sets."""
    if not cps:
        raise ValueError("no change point sets to conciliate")
    sizes = {len(c) for c in cps}
    if len(sizes) != 1:
        raise ValueError(f"change point sets differ in cardinality: {sorted(sizes)}")
    stacked = np.array([sorted(c.taus) for c in cps], dtype=float).reshape(len(cps), -1)
    if mode == "median":
        rep = np.median(stacked, axis=0)
    elif mode == "mean":
        rep = stacked.mean(axis=0)
    else:
        raise ValueError(f"unknown conciliation mode {mode!r}")
    return ChangePointSet(tuple(float(v) for v in rep))
