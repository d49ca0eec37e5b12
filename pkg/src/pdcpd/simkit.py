"""Single-station, multi-server FIFO queue with a piecewise-constant staffing roster.

Times are minutes from the start of the horizon. Service durations are drawn per
entity from one seeded stream (entity ``i`` always gets draw ``i``), so two runs
that differ only in the roster see identical work content.
"""
from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientDataError

ARRIVAL = "arrival"
SERVICE_START = "service_start"
SERVICE_END = "service_end"
EVENT_KINDS = (ARRIVAL, SERVICE_START, SERVICE_END)



@dataclass(frozen=True)
class ArrivalTrace:
    times: np.ndarray
    horizon_min: float = 1440.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        object.__setattr__(self, "times", times)
        if self.horizon_min <= 0:
            raise ConfigurationError("horizon_min must be positive")
        if times.size:
            if np.any(np.diff(times) < 0):
                raise ConfigurationError("arrival times must be non-decreasing")
            if times[0] < 0 or times[-1] >= self.horizon_min:
                raise ConfigurationError("arrival times must lie in [0, horizon_min)")

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class ResourceSchedule:
    """Server count ``levels[i]`` applies on ``[change_points[i-1], change_points[i])``."""

    change_points: tuple[float, ...]
    levels: tuple[int, ...]
    horizon_min: float = 1440.0

    def __post_init__(self):
        cps = tuple(float(c) for c in self.change_points)
        levels = tuple(int(v) for v in self.levels)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ConfigurationError("schedule needs at least one level")
        if len(levels) != len(cps) + 1:
            raise ConfigurationError(
                f"expected {len(cps) + 1} levels for {len(cps)} change points, got {len(levels)}"
            )
        if any(v < 1 for v in levels):
            raise ConfigurationError("every level must be >= 1")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigurationError("change points must be strictly increasing")
        if cps and (cps[0] <= 0 or cps[-1] >= self.horizon_min):
            raise ConfigurationError("change points must lie inside (0, horizon_min)")
        if any(a == b for a, b in zip(levels, levels[1:])):
            raise ConfigurationError("adjacent levels must differ")

    @classmethod
    def constant(cls, level: int, horizon_min: float = 1440.0) -> "ResourceSchedule":
        return cls((), (level,), horizon_min)

    def level_at(self, t: float) -> int:
        return self.levels[int(np.searchsorted(self.change_points, t, side="right"))]

    def levels_at(self, t) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.change_points), np.asarray(t, dtype=float), side="right")
        return np.asarray(self.levels)[idx]

    def capacity_integral(self, edges: np.ndarray) -> np.ndarray:
        """Scheduled server-minutes inside each ``[edges[i], edges[i+1])``."""
        bounds = np.concatenate(([0.0], self.change_points, [self.horizon_min]))
        cum = np.concatenate(([0.0], np.cumsum(np.diff(bounds) * np.asarray(self.levels))))
        at_edges = np.interp(np.asarray(edges, dtype=float), bounds, cum)
        return np.diff(at_edges)

    def interval_levels(self, n_intervals: int, interval_min: float) -> np.ndarray:
        """Level in force at the start of each grid interval."""
        return self.levels_at(np.arange(n_intervals) * interval_min)


@dataclass(frozen=True)
class ServiceModel:
    """``exponential``: mean; ``lognormal``: mu, sigma of log-durations; ``deterministic``: value."""

    family: str
    params: dict

    def __post_init__(self):
        p = dict(self.params)
        object.__setattr__(self, "params", p)
        if self.family == "exponential":
            scale = [p.get("mean", 0.0)]
        elif self.family == "lognormal":
            scale = [p.get("sigma", 0.0)]
            if "mu" not in p:
                raise ConfigurationError("lognormal service needs mu")
        elif self.family == "deterministic":
            scale = [p.get("value", 0.0)]
        else:
            raise ConfigurationError(f"unknown service family {self.family!r}")
        if not all(s > 0 for s in scale):
            raise ConfigurationError(f"{self.family} scale parameters must be > 0: {p}")

    @property
    def mean(self) -> float:
        p = self.params
        if self.family == "exponential":
            return p["mean"]
        if self.family == "lognormal":
            return math.exp(p["mu"] + p["sigma"] ** 2 / 2)
        return p["value"]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.family == "exponential":
            return rng.exponential(p["mean"], n)
        if self.family == "lognormal":
            return rng.lognormal(p["mu"], p["sigma"], n)
        return np.full(n, float(p["value"]))


class EventLog:
    """Event records plus, when known, the staffing roster the log was produced under.

    The roster is needed to turn busy time into idle time; simulated logs always
    carry it. A log built from per-entity arrays (the simulator's output) only
    materializes its record list when asked for it.
    """

    def __init__(self, records=None, horizon_min: float = 1440.0,
                 schedule: ResourceSchedule | None = None):
        self._records = None if records is None else list(records)
        self.horizon_min = float(horizon_min)
        self.schedule = schedule
        self._table = None

    @classmethod
    def from_table(cls, arr, start, end, horizon_min, schedule=None) -> "EventLog":
        """Per-entity arrays; ``start``/``end`` are NaN for events not reached."""
        log = cls(None, horizon_min, schedule)
        arr = np.asarray(arr, dtype=float)
        log._table = (np.arange(arr.size), arr, np.asarray(start, dtype=float), np.asarray(end, dtype=float))
        return log

    @property
    def records(self) -> list:
        """``(entity_id, event, time_min)`` tuples ordered by time, then event kind, then id."""
        if self._records is None:
            self._records = _records_from_table(*self._table)
        return self._records

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return (self.records == other.records and self.horizon_min == other.horizon_min
                and self.schedule == other.schedule)

    def __repr__(self):
        return f"EventLog({len(self)} records, horizon_min={self.horizon_min})"

    def entity_table(self):
        """Per-entity ``(ids, arrival, start, end)``; missing events are NaN."""
        if self._table is not None:
            return self._table
        ids = sorted({r[0] for r in self.records})
        pos = {e: i for i, e in enumerate(ids)}
        cols = {k: np.full(len(ids), np.nan) for k in EVENT_KINDS}
        for eid, kind, t in self.records:
            cols[kind][pos[eid]] = t
        self._table = (np.asarray(ids, dtype=int), cols[ARRIVAL], cols[SERVICE_START], cols[SERVICE_END])
        return self._table

    def service_durations(self) -> np.ndarray:
        _, _, start, end = self.entity_table()
        done = ~np.isnan(start) & ~np.isnan(end)
        return end[done] - start[done]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["entity_id", "event", "time_min"])
            for eid, kind, t in self.records:
                w.writerow([eid, kind, f"{t:.6f}"])


def _records_from_table(ids, arr, start, end) -> list:
    records = []
    for i in range(arr.size):
        eid = int(ids[i])
        records.append((eid, ARRIVAL, float(arr[i])))
        if not math.isnan(start[i]):
            records.append((eid, SERVICE_START, float(start[i])))
        if not math.isnan(end[i]):
            records.append((eid, SERVICE_END, float(end[i])))
    order = {k: j for j, k in enumerate(EVENT_KINDS)}
    records.sort(key=lambda r: (r[2], order[r[1]], r[0]))
    return records


def simulate(
    trace: ArrivalTrace,
    schedule: ResourceSchedule,
    service: ServiceModel,
    seed: int,
) -> EventLog:
    """Run one replication. FIFO, non-preemptive: on a capacity drop, busy servers
    finish their current job and no new job starts until the busy count is below
    the new level. At equal times a departure frees its server before a roster
    change takes effect, and both precede an arrival. Events at or after the
    horizon are not recorded."""
    if schedule is None or not schedule.levels:
        raise ConfigurationError("empty resource levels")
    if not math.isclose(trace.horizon_min, schedule.horizon_min):
        raise ConfigurationError(
            f"trace horizon {trace.horizon_min} != schedule horizon {schedule.horizon_min}"
        )
    horizon = float(trace.horizon_min)
    arr = trace.times
    n = arr.size
    rng = np.random.default_rng(seed % 2**64)
    durations = service.sample(rng, n)
    start = [math.nan] * n
    end = [math.nan] * n
    arrivals = arr.tolist()
    dur = durations.tolist()
    staff_t = list(schedule.change_points)
    staff_lv = list(schedule.levels[1:])

    # arrivals and roster changes are already sorted; only departures need a heap
    departures: list = []
    seq = ai = si = 0
    capacity = schedule.levels[0]
    busy = 0
    queue: deque[int] = deque()
    inf = math.inf
    while True:
        ta = arrivals[ai] if ai < n else inf
        ts = staff_t[si] if si < len(staff_t) else inf
        td = departures[0][0] if departures else inf
        if td == ts == ta == inf:
            break
        if td <= ts and td <= ta:
            t, _, i = heapq.heappop(departures)
            if t >= horizon:
                break
            end[i] = t
            busy -= 1
        elif ts <= ta:
            t = ts
            if t >= horizon:
                break
            capacity = staff_lv[si]
            si += 1
        else:
            t = ta
            if t >= horizon:
                break
            queue.append(ai)
            ai += 1
        while queue and busy < capacity:
            i = queue.popleft()
            start[i] = t
            busy += 1
            heapq.heappush(departures, (t + dur[i], seq, i))
            seq += 1
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    return EventLog.from_table(arr, start, end, horizon, schedule)


def sample_arrivals(rate_profile: Sequence[float], horizon_min: float, seed: int) -> ArrivalTrace:
    """Nonhomogeneous Poisson arrivals by thinning.

    ``rate_profile`` holds arrivals/minute on equal-width pieces that tile the horizon.
    """
    rates = np.asarray(rate_profile, dtype=float).reshape(-1)
    if rates.size == 0:
        raise ConfigurationError("empty rate profile")
    if np.any(rates < 0) or not np.all(np.isfinite(rates)):
        raise ConfigurationError("rates must be finite and >= 0")
    lam_max = rates.max()
    if lam_max == 0:
        return ArrivalTrace(np.empty(0), horizon_min)
    rng = np.random.default_rng(seed % 2**64)
    # homogeneous candidates at the envelope rate, then accept with prob rate(t)/lam_max
    n = rng.poisson(lam_max * horizon_min)
    cand = np.sort(rng.uniform(0.0, horizon_min, n))
    width = horizon_min / rates.size
    piece = np.minimum((cand // width).astype(int), rates.size - 1)
    keep = rng.uniform(0.0, lam_max, n) < rates[piece]
    return ArrivalTrace(cand[keep], horizon_min)


def fit_service(logs: Iterable[EventLog], family: str, min_samples: int = 30) -> ServiceModel:
    """Maximum-likelihood fit of the service-duration family over completed services."""
    parts = [log.service_durations() for log in logs]
    d = np.concatenate(parts) if parts else np.empty(0)
    if d.size < min_samples:
        raise InsufficientDataError(f"need >= {min_samples} completed services, got {d.size}")
    if family == "exponential":
        return ServiceModel("exponential", {"mean": float(d.mean())})
    if family == "lognormal":
        if np.any(d <= 0):
            raise InsufficientDataError("lognormal fit needs strictly positive durations")
        logs_d = np.log(d)
        return ServiceModel("lognormal", {"mu": float(logs_d.mean()), "sigma": float(logs_d.std())})
    if family == "deterministic":
        return ServiceModel("deterministic", {"value": float(d.mean())})
    raise ConfigurationError(f"unknown service family {family!r}")
