"""Command line entry point.

    pdcpd simulate   --config run.cfg --out data/
    pdcpd featurize  --logs data/log_*.csv --schedule data/roster.csv --out feats/
    pdcpd detect-dd  --input feats/*.csv --stat mean --beta auto --n-cps 2 --out dd_cps.csv
    pdcpd detect-pd  --config run.cfg --logs data/log_*.csv --features feats/*.csv --init dd_cps.csv --out pd/
    pdcpd report     --config run.cfg --out report/ [--surface]

Every subcommand reads and writes files only. ``--set key=value`` overrides
entries of the flat config file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import pipeline
from .annealer import write_trace
from .ddcpd import conciliate, detect_multi
from .errors import ConfigurationError, InsufficientDataError, ParseError, TrainingError
from .featurizer import FeatureSeries, snapshot_features
from .simkit import fit_service

log = logging.getLogger("pdcpd")


def _config(args) -> pipeline.PipelineConfig:
    return pipeline.load_config(args.config, args.set or ())


def _write_truth(path, cfg):
    with open(path, "w") as fh:
        fh.write("cp_index,cp_time_min\n")
        for c in cfg.scenario.change_points:
            fh.write(f"{c / cfg.scenario.interval_min:g},{c:.6f}\n")


def cmd_simulate(args):
    cfg = _config(args)
    os.makedirs(args.out, exist_ok=True)
    data = pipeline.generate_scenario(cfg.scenario)
    for r, lg in enumerate(data.logs):
        lg.write_csv(os.path.join(args.out, f"log_{r:03d}.csv"))
    # the roster is what the real system would record about its own staffing
    pipeline.write_schedule_csv(os.path.join(args.out, "roster.csv"), data.schedule)
    _write_truth(os.path.join(args.out, "truth.csv"), cfg)
    with open(os.path.join(args.out, "run.cfg"), "w") as fh:
        fh.write(pipeline.dump_config(cfg))
    log.info("wrote %d event logs to %s", len(data.logs), args.out)


def cmd_featurize(args):
    schedule = None
    if args.schedule:
        schedule = pipeline.read_schedule_csv(args.schedule, args.horizon)
    os.makedirs(args.out, exist_ok=True)
    for path in args.logs:
        lg = pipeline.ingest_event_log(path, args.horizon, schedule)
        feats = snapshot_features(lg, args.interval)
        stem = os.path.splitext(os.path.basename(path))[0]
        feats.write_csv(os.path.join(args.out, f"{stem}_features.csv"))
    log.info("featurized %d logs", len(args.logs))


def cmd_detect_dd(args):
    series = [FeatureSeries.read_csv(p, args.interval) for p in args.input]
    beta = args.beta if args.beta == "auto" else float(args.beta)
    per = [detect_multi(s, args.stat, beta, max_cp=args.max_cp, n_cps=args.n_cps) for s in series]
    if len(per) == 1:
        cps = per[0]
    else:
        cps = conciliate(per, args.conciliation)
    if args.out:
        cps.write_csv(args.out, args.interval)
    else:
        sys.stdout.write("cp_index,cp_time_min\n")
        for t in cps.taus:
            sys.stdout.write(f"{t},{float(t) * args.interval:.6f}\n")


def cmd_detect_pd(args):
    cfg = _config(args)
    if len(args.logs) != len(args.features):
        raise ConfigurationError(f"{len(args.logs)} logs but {len(args.features)} feature files")
    interval = cfg.scenario.interval_min
    horizon = cfg.scenario.horizon_min
    logs = [pipeline.ingest_event_log(p, horizon) for p in args.logs]
    observed = [FeatureSeries.read_csv(p, interval) for p in args.features]
    traces = pipeline.traces_from_logs(logs)
    service = fit_service(logs, cfg.fit_family)
    tau0 = pipeline.read_change_points(args.init)
    truth = None
    if args.truth:
        truth = pipeline.read_change_points(args.truth).times(interval)
    per = None
    if truth is not None:
        per = pipeline.detect_each(observed, len(tau0), cfg.statistic, cfg.beta)
    report = pipeline.run_stage_b(tau0, traces, observed, cfg.scenario.levels, service, cfg,
                                  true_times_min=truth, dd_per_realization=per,
                                  on_visit=_progress(cfg))
    os.makedirs(args.out, exist_ok=True)
    report.pd_cps.write_csv(os.path.join(args.out, "pd_cps.csv"), interval)
    write_trace(os.path.join(args.out, "anneal_trace.csv"), report.archive, interval)
    report.write_csv(os.path.join(args.out, "report.csv"))
    report.write_summary(os.path.join(args.out, "summary.csv"))
    log.info("PD change points (min): %s", report.pd_cps.times(interval))


def cmd_report(args):
    cfg = _config(args)
    report = pipeline.run_case_study(cfg, args.out, surface=args.surface, on_visit=_progress(cfg))
    with open(os.path.join(args.out, "run.cfg"), "w") as fh:
        fh.write(pipeline.dump_config(cfg))
    for key, value in report.summary():
        print(f"{key}: {value}")


def _progress(cfg):
    def show(v):
        log.info("k=%d taus=%s eps=%.4f accepted=%s h=%d", v.k, v.taus, v.eps, v.accepted, v.half_width)
    return show


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdcpd", description="Process-driven change point detection")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")

    sp = sub.add_parser("simulate", help="simulate the scenario and write event logs")
    with_config(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("featurize", help="event logs to snapshot feature CSVs")
    sp.add_argument("--logs", nargs="+", required=True)
    sp.add_argument("--schedule", help="roster CSV (start_min,level); without it capacity is observed")
    sp.add_argument("--interval", type=float, default=10.0)
    sp.add_argument("--horizon", type=float, default=1440.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_featurize)

    sp = sub.add_parser("detect-dd", help="data-driven change points from feature CSVs")
    sp.add_argument("--input", nargs="+", required=True)
    sp.add_argument("--stat", choices=("mean", "stddev"), default="mean")
    sp.add_argument("--beta", default="auto")
    sp.add_argument("--n-cps", type=int, default=None)
    sp.add_argument("--max-cp", type=int, default=5)
    sp.add_argument("--conciliation", choices=("median", "mean"), default="median")
    sp.add_argument("--interval", type=float, default=10.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_detect_dd)

    sp = sub.add_parser("detect-pd", help="refine change points by simulation-in-the-loop annealing")
    with_config(sp)
    sp.add_argument("--logs", nargs="+", required=True)
    sp.add_argument("--features", nargs="+", required=True)
    sp.add_argument("--init", required=True, help="initial change points CSV")
    sp.add_argument("--truth", help="ground-truth change points CSV, for scoring only")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_detect_pd)

    sp = sub.add_parser("report", help="full case study: both stages plus every artifact")
    with_config(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--surface", action="store_true", help="also evaluate the response surface grid")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigurationError, ParseError, InsufficientDataError, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
