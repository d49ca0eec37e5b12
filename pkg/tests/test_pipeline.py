import csv
import time

import numpy as np
import pytest

from pdcpd.annealer import AnnealConfig
from pdcpd.ddcpd import ChangePointSet
from pdcpd.errors import ConfigurationError, ParseError
from pdcpd.pipeline import (
    PipelineConfig,
    RealizationRow,
    RunReport,
    Scenario,
    build_config,
    dump_config,
    generate_scenario,
    ingest_event_log,
    load_config,
    parse_config_text,
    read_change_points,
    read_schedule_csv,
    run_case_study,
    run_stage_a,
    run_stage_b,
    snap,
    truth_deviation,
    write_schedule_csv,
)
from pdcpd.simkit import ResourceSchedule, ServiceModel, sample_arrivals, simulate


def tiny_config(**over):
    values = {"n_realizations": "3", "k_max": "3", "replications": "2", "narx_epochs": "100"}
    values.update({k: str(v) for k, v in over.items()})
    return build_config(values)


# ---------------------------------------------------------------- scenario


def test_default_scenario_shapes():
    scn = Scenario()
    assert scn.n_intervals == 144 and scn.true_taus == (60.0, 120.0)
    data = generate_scenario(scn)
    assert len(data.observed) == 30
    assert all(f.values.shape == (144, 6) for f in data.observed)


def test_level_one_is_congested():
    # overnight utilization on one server above 0.8
    scn = Scenario()
    rate = scn.rate_profile[0]
    assert rate * 3.0 > 0.8


def test_seeds_give_different_traces():
    a = generate_scenario(Scenario(n_realizations=1, master_seed=1)).traces[0]
    b = generate_scenario(Scenario(n_realizations=1, master_seed=2)).traces[0]
    n = min(len(a.times), len(b.times))
    assert not np.array_equal(a.times[:n], b.times[:n])


def test_single_realization():
    data = generate_scenario(Scenario(n_realizations=1))
    assert len(data.traces) == len(data.observed) == 1


@pytest.mark.parametrize("kw", [dict(levels=(0, 3, 2)), dict(levels=(1, 4, 2)), dict(n_realizations=0),
                                dict(interval_min=7.0), dict(change_points=(600.0,))])
def test_invalid_scenario(kw):
    with pytest.raises(ConfigurationError):
        Scenario(**kw)


# ---------------------------------------------------------------- stage A


def test_stage_a_within_ninety_minutes():
    for seed in range(3):
        cfg = PipelineConfig(scenario=Scenario(master_seed=seed))
        dd = run_stage_a(generate_scenario(cfg.scenario).observed, cfg)
        assert len(dd) == 2
        assert all(abs(t - c) <= 90 for t, c in zip(dd.times(10), (600, 1200)))


def test_stage_a_single_realization_is_identity():
    cfg = PipelineConfig(scenario=Scenario(n_realizations=1))
    obs = generate_scenario(cfg.scenario).observed
    from pdcpd.ddcpd import detect_multi

    assert run_stage_a(obs, cfg).taus == tuple(float(t) for t in detect_multi(obs[0], n_cps=2).taus)


def test_snap_rounds_half_up():
    assert snap((10.5, 19.33)) == (11, 19)
    assert snap(ChangePointSet((59.5, 113.49))) == (60, 113)


def test_truth_deviation_missing_prediction():
    assert truth_deviation((610.0, 1190.0), (600.0, 1200.0), 120) == 20.0
    assert truth_deviation((float("nan"), 1200.0), (600.0, 1200.0), 120) == 120.0


# ---------------------------------------------------------------- stage B and reports


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return run_case_study(tiny_config(), out), out


def test_report_totals_equal_row_sums(tiny_run):
    rep, out = tiny_run
    assert rep.wins + rep.losses + rep.ties == 3
    rows = list(csv.DictReader(open(out / "report.csv")))
    body, total = rows[:-1], rows[-1]
    assert total["realization"] == "total"
    assert float(total["dd_dev_min"]) == pytest.approx(sum(float(r["dd_dev_min"]) for r in body))
    assert float(total["pd_dev_min"]) == pytest.approx(sum(float(r["pd_dev_min"]) for r in body))
    assert total["outcome"] == f"{rep.wins}/{rep.losses}/{rep.ties}"


def test_artifacts_written(tiny_run):
    rep, out = tiny_run
    for name in ("dd_cps.csv", "pd_cps.csv", "anneal_trace.csv", "report.csv", "summary.csv",
                 "features_plot.csv"):
        assert (out / name).exists()
    trace = list(csv.reader(open(out / "anneal_trace.csv")))
    assert len(trace) == 1 + 4
    plot = list(csv.reader(open(out / "features_plot.csv")))
    assert len(plot) == 145 and plot[0][-1] == "dd_segment"
    assert rep.pd_cps.taus == rep.best.taus


def test_report_without_truth(tmp_path):
    cfg = tiny_config(k_max=1)
    data = generate_scenario(cfg.scenario)
    rep = run_stage_b((60, 120), data.traces, data.observed, (1, 3, 2), cfg.scenario.service, cfg)
    assert not rep.has_truth and rep.dd_total_deviation_min is None
    rep.write_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["realization", "dd_tau_1_min", "dd_tau_2_min", "pd_tau_1_min", "pd_tau_2_min"]
    assert len(rows) == 4
    keys = [k for k, _ in rep.summary()]
    assert "wins" not in keys and "best_eps" in keys


def test_outcomes():
    assert RealizationRow(0, (), (), 10.0, 5.0).outcome == "win"
    assert RealizationRow(0, (), (), 5.0, 10.0).outcome == "loss"
    assert RealizationRow(0, (), (), 5.0, 5.0).outcome == "tie"
    assert RealizationRow(0, (), ()).outcome == ""


def test_same_seed_same_bytes(tmp_path):
    cfg = tiny_config(k_max=2)
    run_case_study(cfg, tmp_path / "a")
    run_case_study(cfg, tmp_path / "b")
    for name in ("report.csv", "summary.csv", "anneal_trace.csv", "pd_cps.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# ---------------------------------------------------------------- ingestion


def sample_log():
    return simulate(sample_arrivals([0.3], 1440.0, 1), ResourceSchedule.constant(1),
                    ServiceModel("exponential", {"mean": 3.0}), 2)


def test_ingest_round_trip(tmp_path):
    log = sample_log()
    log.write_csv(tmp_path / "log.csv")
    back = ingest_event_log(tmp_path / "log.csv", 1440.0, log.schedule)
    # times are written with six decimals
    assert [r[:2] for r in back.records] == [r[:2] for r in log.records]
    np.testing.assert_allclose([r[2] for r in back.records], [r[2] for r in log.records], atol=5e-7)


@pytest.mark.parametrize("body, line", [
    ("1,arrival,5\n1,service_start,6\n1,service_end,4\n", 4),
    ("1,arrival,5\n1,service_start,4\n", 3),
    ("1,arrival,5\n1,arrival,6\n", 3),
    ("1,arrival\n", 2),
    ("1,arrive,5\n", 2),
    ("1,arrival,abc\n", 2),
    ("1,arrival,2000\n", 2),
])
def test_ingest_errors_name_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text("entity_id,event,time_min\n" + body)
    with pytest.raises(ParseError) as err:
        ingest_event_log(p)
    assert err.value.line == line


def test_ingest_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("id,kind,t\n")
    with pytest.raises(ParseError) as err:
        ingest_event_log(p)
    assert err.value.line == 1


def test_ingest_large_log_is_fast(tmp_path):
    n = 34_000
    t = np.linspace(0, 1400, n)
    with open(tmp_path / "big.csv", "w") as fh:
        fh.write("entity_id,event,time_min\n")
        for i, a in enumerate(t):
            fh.write(f"{i},arrival,{a:.6f}\n{i},service_start,{a:.6f}\n{i},service_end,{a + 0.01:.6f}\n")
    start = time.perf_counter()
    log = ingest_event_log(tmp_path / "big.csv")
    elapsed = time.perf_counter() - start
    print(f"ingested {3 * n} rows in {elapsed:.2f} s")
    assert len(log.records) == 3 * n
    assert elapsed < 1.0


def test_schedule_csv_round_trip(tmp_path):
    sched = ResourceSchedule((600.0, 1200.0), (1, 3, 2), 1440.0)
    write_schedule_csv(tmp_path / "s.csv", sched)
    assert read_schedule_csv(tmp_path / "s.csv") == sched


def test_change_points_csv_round_trip(tmp_path):
    ChangePointSet((60.0, 113.5)).write_csv(tmp_path / "c.csv", 10)
    assert read_change_points(tmp_path / "c.csv").taus == (60.0, 113.5)


# ---------------------------------------------------------------- configuration


def test_config_round_trip():
    cfg = tiny_config(temp0=0.5, narx_hidden_size=4, service_mean=2.5)
    again = build_config(parse_config_text(dump_config(cfg)))
    assert again == cfg
    assert again.scenario.service.params == {"mean": 2.5}


def test_rate_profile_shorthand():
    cfg = build_config({"rate_profile": "0.2*3, 0.5"})
    assert cfg.scenario.rate_profile == (0.2, 0.2, 0.2, 0.5)


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nmaster_seed = 4\nk_max = 10\n")
    cfg = load_config(p, ["k_max=7"])
    assert cfg.scenario.master_seed == 4 and cfg.anneal.k_max == 7


def test_unknown_key_rejected():
    with pytest.raises(ConfigurationError, match="bogus"):
        build_config({"bogus": "1"})


@pytest.mark.parametrize("values", [{"k_max": "many"}, {"inverted_acceptance": "maybe"}, {"gamma": "2"},
                                    {"narx_split": "sideways"}, {"levels": "1, 5, 2"}])
def test_bad_values_rejected(values):
    with pytest.raises(ConfigurationError):
        build_config(values)


def test_malformed_config_names_line():
    with pytest.raises(ParseError) as err:
        parse_config_text("k_max = 3\nthis line has no separator\n")
    assert err.value.line == 2


def test_override_without_equals():
    with pytest.raises(ConfigurationError):
        load_config(None, ["k_max"])


def test_pipeline_defaults():
    cfg = PipelineConfig()
    assert cfg.n_cps == 2 and cfg.narx.hidden_size == 5
    assert isinstance(cfg.anneal, AnnealConfig) and cfg.anneal.k_max == 60 and cfg.anneal.replications == 5


def test_shipped_config_matches_defaults():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "case_study.cfg"
    assert load_config(path) == PipelineConfig()
