"""Simulated-annealing search over change point placements on the interval grid.

The search is decoupled from how a candidate is scored: ``anneal`` takes any
``evaluate(taus, half_width) -> error`` callable. :class:`ProcessAssessor` is the
simulation-in-the-loop scorer (simulate, featurize, train NARX, test on observed).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ddcpd import ChangePointSet
from .errors import ConfigurationError
from .featurizer import FeatureSeries, average_series, snapshot_features
from .narx import AccuracyReport, NarxConfig, discretize, predict, train_many, windowed_accuracy
from .seeding import derive_seed
from .simkit import ArrivalTrace, ResourceSchedule, ServiceModel, simulate

OBJECTIVES = ("one_minus_accuracy", "mse", "time_deviation")


@dataclass(frozen=True)
class AnnealConfig:
    k_max: int = 60
    neighbor_radius_n: int = 6
    temp0: float = 1.0
    gamma: float = 0.95
    replications: int = 5
    objective: str = "one_minus_accuracy"
    window_half_width0: int = 12
    window_shrink: float = 0.8
    window_floor: int = 3
    inverted_acceptance: bool = False

    def __post_init__(self):
        if self.k_max < 0:
            raise ConfigurationError("k_max must be >= 0")
        if self.neighbor_radius_n < 1:
            raise ConfigurationError("neighbor radius must be >= 1")
        if self.temp0 <= 0:
            raise ConfigurationError("temp0 must be > 0")
        if not 0 < self.gamma < 1:
            raise ConfigurationError("gamma must be in (0, 1)")
        if self.replications < 1:
            raise ConfigurationError("need at least one replication")
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"unknown objective {self.objective!r}")
        if not 0 < self.window_shrink <= 1 or self.window_floor < 1:
            raise ConfigurationError("invalid window constriction schedule")


@dataclass
class Visit:
    k: int
    taus: tuple
    eps: float
    accepted: bool
    temperature: float
    half_width: int


@dataclass
class AnnealState:
    k: int = 0
    taus: tuple = ()
    eps: float = math.inf
    half_width: int = 12
    archive: list = field(default_factory=list)

    def best(self) -> Visit:
        """First visit attaining the minimum error."""
        return min(self.archive, key=lambda v: v.eps)


def temp(k: int, cfg: AnnealConfig) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return cfg.temp0 * cfg.gamma**k


def neighbors(taus, n: int, grid: int, rng: np.random.Generator, max_tries: int = 1000) -> tuple:
    """Offset every change point by an independent uniform integer in ``[-n, n]``.

    The result is sorted; draws with duplicates or points outside ``[1, grid-1]``
    are rejected and redrawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base = np.asarray([int(t) for t in getattr(taus, "taus", taus)], dtype=int)
    for _ in range(max_tries):
        cand = np.sort(base + rng.integers(-n, n + 1, size=base.size))
        if cand.size and (cand[0] < 1 or cand[-1] > grid - 1):
            continue
        if np.any(np.diff(cand) <= 0):
            continue
        return tuple(int(c) for c in cand)
    raise ConfigurationError(f"no feasible {n}-neighbor of {tuple(base)} on a grid of {grid}")


def _accept(eps, eps_inc, k, temperature, rng, inverted):
    if inverted:
        # inverted rule: a worse candidate is *kept out* with probability exp(eps - eps_inc/(k T))
        if eps < eps_inc:
            return True
        scale = k * temperature
        if scale <= 0 or not math.isfinite(eps_inc):
            return False
        p_keep = min(1.0, math.exp(min(eps - eps_inc / scale, 700.0)))
        return rng.random() >= p_keep
    if eps < eps_inc:
        return True
    delta = eps - eps_inc
    if delta == 0:
        return True
    scale = k * temperature
    if scale <= 0:
        return False
    return rng.random() < math.exp(-delta / scale)


def anneal(
    tau0,
    evaluate: Callable[[tuple, int], float],
    cfg: AnnealConfig,
    seed: int,
    grid: int,
    on_visit: Callable[[Visit], None] | None = None,
) -> tuple[tuple, AnnealState]:
    """Run the chain and return ``(best taus, final state)``.

    ``tau0`` is scored first (k = 0) against an infinite sentinel, so it always
    becomes the initial incumbent. Each later step draws a neighbor of the
    incumbent, scores it, and accepts it if better or with Metropolis probability
    ``exp(-delta / (k * temp(k)))``. After every strict improvement of the
    incumbent the scoring window shrinks. The answer is the argmin over all visits.
    """
    rng = np.random.default_rng(seed % 2**64)
    state = AnnealState(taus=tuple(int(t) for t in getattr(tau0, "taus", tau0)),
                        half_width=cfg.window_half_width0)
    memo: dict = {}

    def score(taus, h):
        key = (taus, h)
        if key not in memo:
            memo[key] = float(evaluate(taus, h))
        return memo[key]

    def record(v):
        state.archive.append(v)
        if on_visit is not None:
            on_visit(v)

    eps0 = score(state.taus, state.half_width)
    state.eps = eps0
    record(Visit(0, state.taus, eps0, True, temp(0, cfg), state.half_width))

    for k in range(1, cfg.k_max + 1):
        state.k = k
        t_k = temp(k, cfg)
        cand = neighbors(state.taus, cfg.neighbor_radius_n, grid, rng)
        h = state.half_width
        eps = score(cand, h)
        improved = eps < state.eps
        accepted = _accept(eps, state.eps, k, t_k, rng, cfg.inverted_acceptance)
        if accepted:
            state.taus, state.eps = cand, eps
        record(Visit(k, cand, eps, accepted, t_k, h))
        if accepted and improved:
            state.half_width = max(cfg.window_floor, int(state.half_width * cfg.window_shrink))
    return state.best().taus, state


def write_trace(path, archive: Sequence[Visit], interval_min: float):
    n_cp = max((len(v.taus) for v in archive), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", *[f"tau_{i + 1}_min" for i in range(n_cp)], "eps", "accepted",
                    "temperature", "window_half_width"])
        for v in archive:
            w.writerow([v.k, *[f"{t * interval_min:.1f}" for t in v.taus], repr(float(v.eps)),
                        int(v.accepted), repr(float(v.temperature)), v.half_width])


# ---------------------------------------------------------------- process-driven assessment


@dataclass
class ProcessAssessor:
    """Scores candidate change points against observed per-realization features."""

    traces: Sequence[ArrivalTrace]
    observed: Sequence[FeatureSeries]
    levels: tuple
    service: ServiceModel
    interval_min: float = 10.0
    replications: int = 5
    narx: NarxConfig = NarxConfig()
    objective: str = "one_minus_accuracy"
    seed: int = 0
    level_bounds: tuple = (1, 3)

    def __post_init__(self):
        if len(self.traces) != len(self.observed):
            raise ConfigurationError(
                f"{len(self.traces)} arrival traces but {len(self.observed)} observed series"
            )
        if not self.traces:
            raise ConfigurationError("need at least one realization")

    def schedule(self, taus) -> ResourceSchedule:
        horizon = self.traces[0].horizon_min
        return ResourceSchedule(tuple(float(t) * self.interval_min for t in taus), self.levels, horizon)

    def simulated_features(self, r: int, schedule: ResourceSchedule) -> FeatureSeries:
        feats = []
        for s in range(self.replications):
            seed = derive_seed(self.seed, "replication", r, s)
            try:
                log = simulate(self.traces[r], schedule, self.service, seed)
            except Exception as exc:
                raise RuntimeError(f"simulation failed for realization {r} (seed={seed}): {exc}") from exc
            feats.append(snapshot_features(log, self.interval_min))
        return average_series(feats)

    def assess(self, taus, half_width: int) -> list[AccuracyReport]:
        taus = tuple(int(t) for t in getattr(taus, "taus", taus))
        schedule = self.schedule(taus)
        T = self.observed[0].n_intervals
        labels = schedule.interval_levels(T, self.interval_min).astype(float)
        sim_feats = [self.simulated_features(r, schedule) for r in range(len(self.traces))]
        seeds = [derive_seed(self.seed, "narx", r) for r in range(len(self.traces))]
        models = train_many(sim_feats, [labels] * len(sim_feats), self.narx, seeds)
        reports = []
        for model, obs in zip(models, self.observed):
            real = predict(model, obs, labels)
            lv = discretize(real, self.level_bounds)
            reports.append(windowed_accuracy(lv, labels, taus, half_width, self.interval_min, pred_real=real))
        return reports

    def __call__(self, taus, half_width: int) -> float:
        return float(np.mean([rep.error(self.objective) for rep in self.assess(taus, half_width)]))


def pda(
    traces: Sequence[ArrivalTrace],
    levels,
    tau,
    observed: Sequence[FeatureSeries],
    cfg: AnnealConfig,
    service: ServiceModel,
    narx: NarxConfig = NarxConfig(),
    interval_min: float = 10.0,
    seed: int = 0,
    half_width: int | None = None,
) -> float:
    """Mean per-realization error of change points ``tau`` (grid indices)."""
    assessor = ProcessAssessor(traces, observed, tuple(levels), service, interval_min,
                               cfg.replications, narx, cfg.objective, seed)
    h = cfg.window_half_width0 if half_width is None else half_width
    return assessor(tau, h)
