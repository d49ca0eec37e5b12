"""End-to-end orchestration: scenario generation, the two detection stages, reports.

Seed derivation (every stream is ``derive_seed(master_seed, *labels)``):

    arrivals of realization r         ("arrivals", r)
    ground-truth service draws        ("truth", r)
    replication s of realization r    (derive_seed(master, "pda"), "replication", r, s)
    NARX initialization/split         (derive_seed(master, "pda"), "narx", r)
    annealer moves and acceptance     ("anneal",)

Replication and NARX seeds do not depend on the candidate change points, so
every candidate is scored under common random numbers.
"""
from __future__ import annotations

import configparser
import csv
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .annealer import AnnealConfig, ProcessAssessor, Visit, anneal, write_trace
from .ddcpd import ChangePointSet, conciliate, detect_multi
from .errors import ConfigurationError, ParseError
from .featurizer import FEATURE_NAMES, FeatureSeries, snapshot_features
from .narx import NarxConfig
from .seeding import derive_seed
from .simkit import (
    EVENT_KINDS,
    ArrivalTrace,
    EventLog,
    ResourceSchedule,
    ServiceModel,
    fit_service,
    sample_arrivals,
    simulate,
)

LEVEL_RANGE = (1, 3)


def case_study_rates() -> tuple:
    """Half-hourly arrivals per minute: 0.275 overnight, 0.7 from 10:30 to 19:00."""
    return tuple(0.7 if 10.5 <= k / 2 < 19.0 else 0.275 for k in range(48))


@dataclass(frozen=True)
class Scenario:
    n_realizations: int = 30
    horizon_min: float = 1440.0
    interval_min: float = 10.0
    change_points: tuple = (600.0, 1200.0)
    levels: tuple = (1, 3, 2)
    rate_profile: tuple = field(default_factory=case_study_rates)
    service_family: str = "exponential"
    service_params: tuple = (("mean", 3.0),)
    master_seed: int = 0

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ConfigurationError("n_realizations must be >= 1")
        if any(not LEVEL_RANGE[0] <= int(v) <= LEVEL_RANGE[1] for v in self.levels):
            raise ConfigurationError(f"levels {self.levels} outside {list(LEVEL_RANGE)}")
        n = self.horizon_min / self.interval_min
        if self.interval_min <= 0 or not math.isclose(n, round(n)):
            raise ConfigurationError("horizon must be a whole number of intervals")
        self.schedule  # validates change points against levels
        self.service

    @property
    def n_intervals(self) -> int:
        return int(round(self.horizon_min / self.interval_min))

    @property
    def schedule(self) -> ResourceSchedule:
        return ResourceSchedule(tuple(float(c) for c in self.change_points),
                                tuple(int(v) for v in self.levels), float(self.horizon_min))

    @property
    def service(self) -> ServiceModel:
        return ServiceModel(self.service_family, dict(self.service_params))

    @property
    def true_taus(self) -> tuple:
        return tuple(float(c) / self.interval_min for c in self.change_points)


@dataclass(frozen=True)
class PipelineConfig:
    scenario: Scenario = field(default_factory=Scenario)
    statistic: str = "mean"
    beta: object = "auto"
    conciliation: str = "median"
    fit_family: str = "exponential"
    anneal: AnnealConfig = field(default_factory=lambda: AnnealConfig(temp0=0.01, window_shrink=1.0))
    narx: NarxConfig = field(default_factory=lambda: NarxConfig(split="random"))
    surface_span_min: float = 120.0
    surface_step: int = 2

    @property
    def n_cps(self) -> int:
        return len(self.scenario.change_points)


# ---------------------------------------------------------------- flat key=value config

_SCENARIO_KEYS = {
    "n_realizations": int, "horizon_min": float, "interval_min": float, "master_seed": int,
    "service_family": str,
}
_TOP_KEYS = {"statistic": str, "conciliation": str, "fit_family": str,
             "surface_span_min": float, "surface_step": int}
_ANNEAL_KEYS = {"k_max": int, "neighbor_radius": ("neighbor_radius_n", int), "temp0": float,
                "gamma": float, "replications": int, "objective": str,
                "window_half_width0": int, "window_shrink": float, "window_floor": int,
                "inverted_acceptance": "bool"}
_NARX_KEYS = {"narx_hidden_size": ("hidden_size", int), "narx_epochs": ("epochs", int),
              "narx_learning_rate": ("learning_rate", float), "narx_patience": ("patience", int),
              "narx_train_fraction": ("train_fraction", float), "narx_split": ("split", str),
              "narx_optimizer": ("optimizer", str),
              "narx_input_delays": ("input_delays", "ints"),
              "narx_feedback_delays": ("feedback_delays", "ints")}


def _floats(text: str) -> tuple:
    """Comma list; ``v*n`` repeats ``v`` n times."""
    out = []
    for item in text.replace("\n", ",").split(","):
        item = item.strip()
        if not item:
            continue
        if "*" in item:
            v, n = item.split("*")
            out.extend([float(v)] * int(n))
        else:
            out.append(float(item))
    return tuple(out)


def _convert(kind, text: str):
    if kind == "bool":
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if kind == "ints":
        return tuple(int(v) for v in _floats(text))
    return kind(text.strip())


def parse_config_text(text: str, path: str = "<config>") -> dict:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=path)
    except configparser.Error as exc:
        # line numbers count the injected section header
        errors = getattr(exc, "errors", None)
        lineno = errors[0][0] if errors else getattr(exc, "lineno", 1)
        raise ParseError(f"malformed line {errors[0][1]!r}" if errors else str(exc).splitlines()[0],
                         path, max(lineno - 1, 1)) from None
    return dict(parser["run"])


def build_config(values: dict) -> PipelineConfig:
    """Turn flat string key/values into a validated :class:`PipelineConfig`."""
    scn, top, ann, nx, params = {}, {}, {}, {}, {}
    try:
        for key, raw in values.items():
            if key in _SCENARIO_KEYS:
                scn[key] = _convert(_SCENARIO_KEYS[key], raw)
            elif key in ("change_points", "rate_profile"):
                scn[key] = _floats(raw)
            elif key == "levels":
                scn[key] = tuple(int(v) for v in _floats(raw))
            elif key.startswith("service_"):
                params[key[len("service_"):]] = float(raw)
            elif key in _TOP_KEYS:
                top[key] = _convert(_TOP_KEYS[key], raw)
            elif key == "beta":
                top[key] = raw.strip() if raw.strip() == "auto" else float(raw)
            elif key in _ANNEAL_KEYS:
                spec = _ANNEAL_KEYS[key]
                name, kind = spec if isinstance(spec, tuple) else (key, spec)
                ann[name] = _convert(kind, raw)
            elif key in _NARX_KEYS:
                name, kind = _NARX_KEYS[key]
                nx[name] = _convert(kind, raw)
            else:
                raise ConfigurationError(f"unknown config key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad value for {key!r}: {exc}") from None
    if params:
        scn["service_params"] = tuple(sorted(params.items()))
    base = PipelineConfig()
    return replace(
        base,
        scenario=replace(base.scenario, **scn),
        anneal=replace(base.anneal, **ann),
        narx=replace(base.narx, **nx),
        **top,
    )


def load_config(path=None, overrides: Sequence[str] = ()) -> PipelineConfig:
    values = {}
    if path is not None:
        with open(path) as fh:
            values = parse_config_text(fh.read(), str(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        values[k.strip()] = v
    return build_config(values)


def dump_config(cfg: PipelineConfig) -> str:
    s, a, n = cfg.scenario, cfg.anneal, cfg.narx
    lines = [
        f"master_seed = {s.master_seed}",
        f"n_realizations = {s.n_realizations}",
        f"horizon_min = {s.horizon_min:g}",
        f"interval_min = {s.interval_min:g}",
        f"change_points = {', '.join(f'{c:g}' for c in s.change_points)}",
        f"levels = {', '.join(str(v) for v in s.levels)}",
        f"rate_profile = {', '.join(repr(float(r)) for r in s.rate_profile)}",
        f"service_family = {s.service_family}",
        *[f"service_{k} = {v!r}" for k, v in s.service_params],
        f"statistic = {cfg.statistic}",
        f"beta = {cfg.beta}",
        f"conciliation = {cfg.conciliation}",
        f"fit_family = {cfg.fit_family}",
        f"k_max = {a.k_max}",
        f"neighbor_radius = {a.neighbor_radius_n}",
        f"temp0 = {a.temp0!r}",
        f"gamma = {a.gamma!r}",
        f"replications = {a.replications}",
        f"objective = {a.objective}",
        f"window_half_width0 = {a.window_half_width0}",
        f"window_shrink = {a.window_shrink!r}",
        f"window_floor = {a.window_floor}",
        f"inverted_acceptance = {str(a.inverted_acceptance).lower()}",
        f"narx_hidden_size = {n.hidden_size}",
        f"narx_epochs = {n.epochs}",
        f"narx_learning_rate = {n.learning_rate!r}",
        f"narx_patience = {n.patience}",
        f"narx_train_fraction = {n.train_fraction!r}",
        f"narx_split = {n.split}",
        f"narx_optimizer = {n.optimizer}",
        f"narx_input_delays = {', '.join(map(str, n.input_delays))}",
        f"narx_feedback_delays = {', '.join(map(str, n.feedback_delays))}",
        f"surface_span_min = {cfg.surface_span_min:g}",
        f"surface_step = {cfg.surface_step}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- scenario and ingestion


@dataclass
class ScenarioData:
    traces: list
    logs: list
    observed: list
    schedule: ResourceSchedule | None = None


def generate_scenario(scn: Scenario) -> ScenarioData:
    """Simulate every realization under the true roster and featurize it."""
    schedule, service = scn.schedule, scn.service
    traces, logs, observed = [], [], []
    for r in range(scn.n_realizations):
        trace = sample_arrivals(scn.rate_profile, scn.horizon_min, derive_seed(scn.master_seed, "arrivals", r))
        log = simulate(trace, schedule, service, derive_seed(scn.master_seed, "truth", r))
        traces.append(trace)
        logs.append(log)
        observed.append(snapshot_features(log, scn.interval_min))
    return ScenarioData(traces, logs, observed, schedule)


def ingest_event_log(path, horizon_min: float = 1440.0, schedule: ResourceSchedule | None = None) -> EventLog:
    """Read and validate an event log CSV; violations name the offending line."""
    path = str(path)
    arrivals, starts, ends = {}, {}, {}
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["entity_id", "event", "time_min"]:
            raise ParseError("expected header entity_id,event,time_min", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", path, lineno)
            try:
                eid, t = int(row[0]), float(row[2])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            kind = row[1]
            if kind not in EVENT_KINDS:
                raise ParseError(f"unknown event {kind!r}", path, lineno)
            if not (math.isfinite(t) and 0 <= t < horizon_min):
                raise ParseError(f"time {t} outside [0, {horizon_min})", path, lineno)
            slot = {"arrival": arrivals, "service_start": starts, "service_end": ends}[kind]
            if eid in slot:
                raise ParseError(f"duplicate {kind} for entity {eid}", path, lineno)
            if kind == "service_start" and not (eid in arrivals and t >= arrivals[eid]):
                raise ParseError(f"service_start before arrival for entity {eid}", path, lineno)
            if kind == "service_end" and not (eid in starts and t >= starts[eid]):
                raise ParseError(f"service_end before service_start for entity {eid}", path, lineno)
            slot[eid] = t
            records.append((eid, kind, t))
    return EventLog(records, float(horizon_min), schedule)


def traces_from_logs(logs: Sequence[EventLog]) -> list:
    out = []
    for log in logs:
        _, arr, _, _ = log.entity_table()
        out.append(ArrivalTrace(np.sort(arr), log.horizon_min))
    return out


def write_schedule_csv(path, schedule: ResourceSchedule):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["start_min", "level"])
        for start, level in zip((0.0, *schedule.change_points), schedule.levels):
            w.writerow([f"{start:.6f}", level])


def read_schedule_csv(path, horizon_min: float = 1440.0) -> ResourceSchedule:
    path = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["start_min", "level"]:
        raise ParseError("expected header start_min,level", path, 1)
    starts, levels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            starts.append(float(row[0]))
            levels.append(int(row[1]))
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), path, lineno) from None
    if not starts or starts[0] != 0.0:
        raise ParseError("first roster row must start at 0", path, 2)
    return ResourceSchedule(tuple(starts[1:]), tuple(levels), horizon_min)


def read_change_points(path) -> ChangePointSet:
    path = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["cp_index", "cp_time_min"]:
        raise ParseError("expected header cp_index,cp_time_min", path, 1)
    taus = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            taus.append(float(row[0]))
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), path, lineno) from None
    return ChangePointSet(tuple(taus))


# ---------------------------------------------------------------- stages


def detect_each(observed: Sequence[FeatureSeries], n_cps: int, statistic: str = "mean", beta="auto") -> list:
    return [detect_multi(obs, statistic, beta, n_cps=n_cps) for obs in observed]


def run_stage_a(observed: Sequence[FeatureSeries], cfg: PipelineConfig) -> ChangePointSet:
    """Per-realization segmentation with the change point count fixed, then conciliation."""
    if not observed:
        raise ConfigurationError("need at least one realization")
    per = detect_each(observed, cfg.n_cps, cfg.statistic, cfg.beta)
    return conciliate(per, cfg.conciliation)


def snap(cps) -> tuple:
    """Round (half up) onto the interval grid."""
    return tuple(int(math.floor(float(t) + 0.5)) for t in getattr(cps, "taus", cps))


def truth_deviation(pred_times_min, true_min, half_width_min: float) -> float:
    """Summed absolute deviation; a missing prediction (NaN) scores the half-width."""
    total = 0.0
    for p, t in zip(pred_times_min, true_min):
        total += half_width_min if math.isnan(p) else abs(p - t)
    return total


@dataclass
class RealizationRow:
    index: int
    dd_times_min: tuple
    pd_times_min: tuple
    dd_dev_min: float | None = None
    pd_dev_min: float | None = None

    @property
    def outcome(self) -> str:
        if self.dd_dev_min is None:
            return ""
        if self.pd_dev_min < self.dd_dev_min:
            return "win"
        if self.pd_dev_min > self.dd_dev_min:
            return "loss"
        return "tie"


@dataclass
class RunReport:
    dd_cps: ChangePointSet
    pd_cps: ChangePointSet
    interval_min: float
    rows: list
    archive: list
    true_times_min: tuple | None = None

    @property
    def has_truth(self) -> bool:
        return self.true_times_min is not None

    def _count(self, outcome):
        return sum(r.outcome == outcome for r in self.rows)

    @property
    def wins(self) -> int:
        return self._count("win")

    @property
    def losses(self) -> int:
        return self._count("loss")

    @property
    def ties(self) -> int:
        return self._count("tie")

    def _total(self, cps) -> float | None:
        if not self.has_truth:
            return None
        return float(sum(abs(t - s) for t, s in zip(cps.times(self.interval_min), self.true_times_min)))

    @property
    def dd_total_deviation_min(self):
        return self._total(self.dd_cps)

    @property
    def pd_total_deviation_min(self):
        return self._total(self.pd_cps)

    @property
    def best(self) -> Visit:
        return min(self.archive, key=lambda v: v.eps)

    def write_csv(self, path):
        """Per-realization table followed by a ``total`` row (sums of the rows above)."""
        n_cp = len(self.dd_cps)
        head = ["realization",
                *[f"dd_tau_{i + 1}_min" for i in range(n_cp)],
                *[f"pd_tau_{i + 1}_min" for i in range(n_cp)]]
        if self.has_truth:
            head += ["dd_dev_min", "pd_dev_min", "outcome"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for r in self.rows:
                row = [r.index, *[_fmt(t) for t in r.dd_times_min], *[_fmt(t) for t in r.pd_times_min]]
                if self.has_truth:
                    row += [_fmt(r.dd_dev_min), _fmt(r.pd_dev_min), r.outcome]
                w.writerow(row)
            if self.has_truth:
                w.writerow(["total", *[""] * (2 * n_cp),
                            _fmt(sum(r.dd_dev_min for r in self.rows)),
                            _fmt(sum(r.pd_dev_min for r in self.rows)),
                            f"{self.wins}/{self.losses}/{self.ties}"])

    def summary(self) -> list:
        items = [
            ("dd_cps_min", " ".join(_fmt(t) for t in self.dd_cps.times(self.interval_min))),
            ("pd_cps_min", " ".join(_fmt(t) for t in self.pd_cps.times(self.interval_min))),
            ("best_eps", repr(float(self.best.eps))),
            ("evaluations", str(len(self.archive))),
        ]
        if self.has_truth:
            items += [
                ("true_cps_min", " ".join(_fmt(t) for t in self.true_times_min)),
                ("dd_total_deviation_min", _fmt(self.dd_total_deviation_min)),
                ("pd_total_deviation_min", _fmt(self.pd_total_deviation_min)),
                ("wins", str(self.wins)),
                ("losses", str(self.losses)),
                ("ties", str(self.ties)),
            ]
        return items

    def write_summary(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            w.writerows(self.summary())


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{float(x):.1f}"


def make_assessor(traces, observed, levels, service, cfg: PipelineConfig, objective=None) -> ProcessAssessor:
    return ProcessAssessor(
        traces, observed, tuple(levels), service,
        interval_min=observed[0].interval_min,
        replications=cfg.anneal.replications,
        narx=cfg.narx,
        objective=objective or cfg.anneal.objective,
        seed=derive_seed(cfg.scenario.master_seed, "pda"),
    )


def run_stage_b(
    tau0,
    traces,
    observed,
    levels,
    service: ServiceModel,
    cfg: PipelineConfig,
    true_times_min=None,
    dd_per_realization=None,
    on_visit=None,
) -> RunReport:
    """Anneal from ``tau0`` and score the result against ground truth when given."""
    dd_cps = tau0 if isinstance(tau0, ChangePointSet) else ChangePointSet(tuple(tau0))
    assessor = make_assessor(traces, observed, levels, service, cfg)
    grid = observed[0].n_intervals
    w = observed[0].interval_min
    best, state = anneal(snap(dd_cps), assessor, cfg.anneal,
                         derive_seed(cfg.scenario.master_seed, "anneal"), grid, on_visit)
    pd_cps = ChangePointSet(tuple(float(t) for t in best))

    h = state.best().half_width
    reports = assessor.assess(best, h)
    if dd_per_realization is None:
        dd_per_realization = [dd_cps] * len(observed)
    rows = []
    for r, (rep, dd) in enumerate(zip(reports, dd_per_realization)):
        dd_t = dd.times(w)
        pd_t = tuple(rep.predicted_cp_times)
        row = RealizationRow(r, dd_t, pd_t)
        if true_times_min is not None:
            row.dd_dev_min = float(sum(abs(a - b) for a, b in zip(dd_t, true_times_min)))
            row.pd_dev_min = truth_deviation(pd_t, true_times_min, h * w)
        rows.append(row)
    truth = None if true_times_min is None else tuple(float(t) for t in true_times_min)
    return RunReport(dd_cps, pd_cps, w, rows, state.archive, truth)


# ---------------------------------------------------------------- plot data


def write_feature_plot(path, observed: Sequence[FeatureSeries], dd_cps: ChangePointSet):
    """Realization-averaged features with the segment index under the DD estimate."""
    w = observed[0].interval_min
    mean = np.mean([o.values for o in observed], axis=0)
    taus = np.asarray(dd_cps.taus, dtype=float)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t_index", "time_min", *observed[0].feature_names, "dd_segment"])
        for t, row in enumerate(mean):
            out.writerow([t, f"{t * w:.1f}", *(f"{v:.6f}" for v in row), int(np.sum(taus <= t))])


def response_surface(assessor: ProcessAssessor, true_taus, span: int, step: int, half_width: int):
    """Average truth deviation of NARX-predicted change points over a grid of
    simulated change point pairs centred on ``true_taus`` (grid units)."""
    w = assessor.interval_min
    true_min = [t * w for t in true_taus]
    offsets = range(-span, span + 1, step)
    rows = []
    c1, c2 = (int(round(t)) for t in true_taus[:2])
    grid = assessor.observed[0].n_intervals
    for d1 in offsets:
        for d2 in offsets:
            taus = (c1 + d1, c2 + d2)
            if not (1 <= taus[0] < taus[1] <= grid - 1):
                continue
            reps = assessor.assess(taus, half_width)
            dev = float(np.mean([truth_deviation(r.predicted_cp_times, true_min, half_width * w) for r in reps]))
            eps = float(np.mean([r.error(assessor.objective) for r in reps]))
            rows.append((taus[0] * w, taus[1] * w, dev, eps))
    return rows


def write_surface(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_1_min", "tau_2_min", "mean_abs_time_deviation_min", "eps"])
        for t1, t2, dev, eps in rows:
            w.writerow([f"{t1:.1f}", f"{t2:.1f}", f"{dev:.4f}", repr(eps)])


# ---------------------------------------------------------------- full run


def run_case_study(cfg: PipelineConfig, out_dir=None, surface: bool = False, on_visit=None) -> RunReport:
    """Generate the scenario, run both stages and (optionally) write every artifact."""
    scn = cfg.scenario
    data = generate_scenario(scn)
    per = detect_each(data.observed, cfg.n_cps, cfg.statistic, cfg.beta)
    dd = conciliate(per, cfg.conciliation)
    service = fit_service(data.logs, cfg.fit_family)
    report = run_stage_b(dd, data.traces, data.observed, scn.levels, service, cfg,
                         true_times_min=tuple(float(c) for c in scn.change_points),
                         dd_per_realization=per, on_visit=on_visit)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        w = scn.interval_min
        dd.write_csv(os.path.join(out_dir, "dd_cps.csv"), w)
        report.pd_cps.write_csv(os.path.join(out_dir, "pd_cps.csv"), w)
        write_trace(os.path.join(out_dir, "anneal_trace.csv"), report.archive, w)
        report.write_csv(os.path.join(out_dir, "report.csv"))
        report.write_summary(os.path.join(out_dir, "summary.csv"))
        write_feature_plot(os.path.join(out_dir, "features_plot.csv"), data.observed, dd)
        if surface:
            assessor = make_assessor(data.traces, data.observed, scn.levels, service, cfg,
                                     objective=cfg.anneal.objective)
            span = int(round(cfg.surface_span_min / w))
            rows = response_surface(assessor, scn.true_taus, span, cfg.surface_step,
                                    cfg.anneal.window_half_width0)
            write_surface(os.path.join(out_dir, "surface.csv"), rows)
    return report
