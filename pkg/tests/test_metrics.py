from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochos.benchmarks import Strategy
from stochos.data import FleetConfig, OperationalParams
from stochos.metrics import (
    METRIC_ROWS, OmLedger, ReportError, emit, improvement, ledger_from_records, ledger_rows, parse_csv,
    read_ledger_csv, render, summarize, write_boxplot_csv, write_ledger_csv,
)
from stochos.rolling import COST_CATEGORIES, run_experiment


def ledger(strategy, experiment, cost, **kw):
    led = OmLedger(strategy, experiment, 30 + experiment, 0, **kw)
    led.costs["repair"] = float(cost)
    return led


@pytest.fixture(scope="module")
def cbs_run(small_dataset):
    return run_experiment(small_dataset, FleetConfig(), OperationalParams(), Strategy("cbs"), 31, seed=2)


def test_single_ledger_mean_is_itself():
    led = ledger("cbs", 0, 12_345.0, vessel_rentals=3, total_downtime=40.0, access_downtime=7.0,
                 production_loss=90.0, revenue_loss=4_000.0, pm=4, cm=1, interruptions=2)
    table = summarize({"cbs": [led]})
    expected = [3, 40.0, 7.0, 90.0, 4.0, 4, 1, 2, 12.345, 0.0, 12.345]
    for name, value in zip(METRIC_ROWS, expected):
        assert table.value(name, "cbs") == pytest.approx(value), name


def test_two_ledgers_median_and_mean():
    table = summarize({"a": [ledger("a", 0, 10e3), ledger("a", 1, 20e3)]})
    assert table.value("Median total cost [$K]", "a") == pytest.approx(15)
    assert table.value("Avg. total cost [$K]", "a") == pytest.approx(15)


@given(st.lists(st.tuples(st.floats(0, 1e5), st.floats(0, 1e5)), min_size=1, max_size=30))
def test_per_experiment_dominance_orders_medians(pairs):
    a = [ledger("a", k, min(x, y)) for k, (x, y) in enumerate(pairs)]
    b = [ledger("b", k, max(x, y)) for k, (x, y) in enumerate(pairs)]
    table = summarize({"a": a, "b": b}, reference="a")
    assert table.value("Median total cost [$K]", "a") <= table.value("Median total cost [$K]", "b")
    assert table.value("Cost inc. from optimal [$K]", "a") == pytest.approx(0, abs=1e-9)


def test_improvement_definition():
    assert improvement(39.69, 42.36) == pytest.approx(100 * (42.36 - 39.69) / 42.36)
    table = summarize({"stochos": [ledger("stochos", 0, 30e3)], "cms": [ledger("cms", 0, 60e3)]})
    assert table.value("Improvement of stochos [%]", "cms") == pytest.approx(50)
    assert table.value("Improvement of stochos [%]", "stochos") == 0


def test_empty_input():
    with pytest.raises(ReportError):
        summarize({})
    with pytest.raises(ReportError):
        summarize({"a": []})


def test_csv_round_trip(tmp_path):
    table = summarize({"x": [ledger("x", 0, 1.5e3), ledger("x", 1, 7e3)], "y": [ledger("y", 0, 2e3),
                                                                              ledger("y", 1, 1e3)]}, "x")
    emit(table, "csv", tmp_path / "t.csv")
    assert parse_csv(tmp_path / "t.csv") == table


def test_json_single_strategy(tmp_path):
    emit(summarize({"cms": [ledger("cms", 0, 5e3)]}), "json", tmp_path / "t.json")
    doc = json.loads((tmp_path / "t.json").read_text())
    assert list(doc) == ["cms"]


def test_markdown_row_order():
    text = render(summarize({"cms": [ledger("cms", 0, 5e3)]}), "markdown")
    names = [line.split("|")[1].strip() for line in text.splitlines()[2:]]
    assert names[:len(METRIC_ROWS)] == list(METRIC_ROWS)


def test_emission_byte_stable(tmp_path):
    table = summarize({"a": [ledger("a", 0, 1.1e3)], "b": [ledger("b", 0, 2.2e3)]}, "a")
    for fmt in ("csv", "json", "markdown"):
        emit(table, fmt, tmp_path / "1")
        emit(table, fmt, tmp_path / "2")
        assert (tmp_path / "1").read_bytes() == (tmp_path / "2").read_bytes()


def test_unknown_format():
    with pytest.raises(ReportError):
        render(summarize({"a": [ledger("a", 0, 1.0)]}), "xml")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit(summarize({"a": [ledger("a", 0, 1.0)]}), "csv", tmp_path / "missing" / "x.csv")


def test_ledger_csv_round_trip(cbs_run, tmp_path):
    rows = ledger_rows(cbs_run.records, "cbs", 0, 31, 2)
    write_ledger_csv(rows, tmp_path / "l.csv")
    back = read_ledger_csv(tmp_path / "l.csv")
    direct = ledger_from_records(cbs_run.records, "cbs", 0, 31, 2)
    assert back.total_cost == pytest.approx(direct.total_cost, abs=1e-6)
    assert (back.pm, back.cm, back.vessel_rentals, back.interruptions) == \
        (direct.pm, direct.cm, direct.vessel_rentals, direct.interruptions)


def test_ledger_invariants(cbs_run):
    led = ledger_from_records(cbs_run.records, "cbs")
    assert led.pm + led.cm == FleetConfig().n_turbines
    assert led.total_cost == pytest.approx(sum(led.costs[k] for k in COST_CATEGORIES))
    assert 0 <= led.access_downtime <= led.total_downtime
    assert led.total_downtime == pytest.approx(led.failure_downtime + led.maintenance_downtime)


def test_interruptions_cross_checked(cbs_run):
    led = ledger_from_records(cbs_run.records, "cbs")
    from_flags = sum(int(((r.start_hour != 0) & ~r.completed).sum()) for r in cbs_run.records)
    from_gantt = sum(row["interrupted"] for row in cbs_run.schedule)
    assert led.interruptions == from_flags == from_gantt


def test_revenue_loss_recomputed_from_raw(cbs_run, small_dataset):
    p = OperationalParams()

    def power(v):  # independent evaluation of the cubic power curve
        if v < 3 or v > 25:
            return 0.0
        return 1.0 if v >= 11 else (v**3 - 27) / (1331 - 27)

    total = 0.0
    for rec in cbs_run.records:
        for h in range(24):
            k = 24 * rec.day + h
            f = power(float(small_dataset.measured["wind"][k]))
            total += rec.down[h].sum() * small_dataset.measured["price"][k] * p.R * f
    led = ledger_from_records(cbs_run.records, "cbs")
    assert led.revenue_loss == pytest.approx(total, abs=0.01)


def test_boxplot_csv(tmp_path):
    write_boxplot_csv({"a": [ledger("a", 1, 2.0), ledger("a", 0, 1.0)]}, tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text() == "strategy,experiment,total_cost\na,0,1.0\na,1,2.0\n"
