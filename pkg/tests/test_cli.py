from __future__ import annotations

import csv
import json

import pytest

from stochos import metrics
from stochos.cli import (
    SAMPLE_DATA, RunManifest, check_matched, cmd_run, experiment_seed, experiment_windows, load_ledgers, main,
)
from stochos.data import ConfigError


def files(path):
    return sorted(p.name for p in path.iterdir())


def test_sample_data_bundled():
    assert {"wind.csv", "wave.csv", "price.csv", "config.json"} <= set(files(SAMPLE_DATA))


def test_run_cms_smoke(tmp_path):
    assert main(["run", "--experiments", "1", "--strategy", "cms", "--out", str(tmp_path)]) == 0
    assert files(tmp_path) == ["cms_exp000_ledger.csv", "cms_exp000_schedule.csv"]
    with (tmp_path / "cms_exp000_schedule.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["turbine", "start_hour", "end_hour", "interrupted"]


def test_run_twice_byte_identical(tmp_path):
    args = ["run", "--experiments", "2", "--strategy", "cbs", "--seed", "9"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in files(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_stride_windows(tmp_path):
    assert experiment_windows(3, 5) == [0, 5, 10]
    assert main(["run", "--experiments", "3", "--stride", "5", "--first-day", "30", "--strategy", "cms",
                 "--out", str(tmp_path)]) == 0
    starts = [led.start_day for led in load_ledgers(tmp_path)["cms"]]
    assert [s - 30 for s in starts] == [0, 5, 10]


def test_seeds_derived_from_base_and_index():
    assert experiment_seed(7, 0) == experiment_seed(7, 0)
    assert len({experiment_seed(7, k) for k in range(50)}) == 50
    assert experiment_seed(7, 1) != experiment_seed(8, 1)


def test_windows_must_fit(tmp_path, capsys):
    code = main(["run", "--experiments", "500", "--strategy", "cms", "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError"


def test_bad_config_structured_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"Phi": 100}')
    assert main(["run", "--config", str(cfg), "--strategy", "cms", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError" and "Phi" in err["message"]


def test_missing_data_dir(tmp_path, capsys):
    assert main(["run", "--data-dir", str(tmp_path / "nope"), "--strategy", "cms", "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "DataError"


def test_compare_needs_two(tmp_path, capsys):
    assert main(["compare", "--strategies", "cms", "--out", str(tmp_path)]) == 2
    assert "two" in json.loads(capsys.readouterr().err.strip())["message"]


def test_compare_self_is_zero_improvement(tmp_path):
    assert main(["compare", "--strategies", "cms,cms", "--experiments", "2", "--format", "csv",
                 "--out", str(tmp_path)]) == 0
    table = metrics.parse_csv(tmp_path / "comparison.csv")
    assert table.strategies == ["cms", "cms#2"]
    assert table.value("Improvement of cms [%]", "cms#2") == 0


def test_compare_pk_host_beats_cms(tmp_path):
    assert main(["compare", "--strategies", "pk-host,cms", "--experiments", "2", "--stride", "4",
                 "--out", str(tmp_path)]) == 0
    leds = load_ledgers(tmp_path)
    for pk, cms in zip(leds["pk-host"], leds["cms"]):
        assert pk.experiment == cms.experiment
        assert pk.total_cost <= cms.total_cost
    assert (tmp_path / "comparison.md").exists()
    with (tmp_path / "boxplot.csv").open() as fh:
        assert next(csv.reader(fh)) == ["strategy", "experiment", "total_cost"]


def test_mismatched_windows_rejected():
    a = [metrics.OmLedger("a", 0, 30, 1)]
    b = [metrics.OmLedger("b", 0, 31, 1)]
    with pytest.raises(ConfigError):
        check_matched({"a": a, "b": b})


def test_report_from_ledgers(tmp_path):
    runs = tmp_path / "runs"
    assert main(["run", "--experiments", "2", "--strategy", "cbs", "--out", str(runs)]) == 0
    assert main(["run", "--experiments", "2", "--strategy", "cms", "--out", str(runs)]) == 0
    out = tmp_path / "report.md"
    assert main(["report", "--in", str(runs), "--format", "markdown", "--out", str(out),
                 "--reference", "cbs", "--boxplot", str(tmp_path / "box.csv")]) == 0
    text = out.read_text()
    assert text.startswith("| Metric | cbs | cms |")
    assert "Improvement of cbs [%]" in text


def test_report_empty_dir(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path), "--out", str(tmp_path / "r.md")]) == 2


def test_dump_scenarios_and_moments(tmp_path):
    out, mom = tmp_path / "s.csv", tmp_path / "m.csv"
    assert main(["dump-scenarios", "--strategy", "md-stochos", "--day", "40", "--out", str(out),
                 "--dump-moments", str(mom)]) == 0
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["channel", "resolution", "index", "scenario", "value"]
    assert len(rows) == 3 * (24 + 7) * 50 + 5 * 50
    with mom.open() as fh:
        assert next(csv.reader(fh)) == ["channel", "resolution", "lead", "mean", "std"]


def test_dump_lp(tmp_path, capsys):
    out = tmp_path / "roll.lp"
    assert main(["dump-lp", "--strategy", "pf-host", "--day", "40", "--out", str(out), "--solve"]) == 0
    assert out.read_text().startswith("\\ stochos roll model")
    assert json.loads(capsys.readouterr().out)["status"] == "optimal_within_gap"


def test_rule_strategy_has_no_model(tmp_path):
    assert main(["dump-lp", "--strategy", "cbs", "--out", str(tmp_path / "x.lp")]) == 2


def test_parallel_jobs_match_serial(tmp_path):
    base = RunManifest(None, str(SAMPLE_DATA), "cbs", seed=4, experiments=2, out=str(tmp_path / "s"))
    assert cmd_run(base) == 0
    par = RunManifest(None, str(SAMPLE_DATA), "cbs", seed=4, experiments=2, out=str(tmp_path / "p"), jobs=2)
    assert cmd_run(par) == 0
    for name in files(tmp_path / "s"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()
