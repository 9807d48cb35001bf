"""O&M ledgers, ensemble summaries and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rolling import COST_CATEGORIES

LEDGER_COLUMNS = (
    "strategy", "experiment", "start_day", "seed", "roll", "day",
    "vessel", "pm", "cm", "interruptions", "crew_hours", "overtime_hours", "spot_hours", "spot_crews",
    "downtime_h", "failure_downtime_h", "maintenance_downtime_h", "access_downtime_h",
    "energy_mwh", "energy_lost_mwh", "revenue",
    "repair", "vessel_cost", "crew", "overtime", "spot", "revenue_loss", "total_cost",
    "status", "gap",
)
CATEGORY_COLUMNS = {"repair": "repair", "vessel": "vessel_cost", "crew": "crew", "overtime": "overtime",
                    "spot": "spot", "revenue_loss": "revenue_loss"}

METRIC_ROWS = (
    "Number of vessel rentals",
    "Total downtime [h]",
    "Accessibility downtime [h]",
    "Production loss [MWh]",
    "Revenue loss [$K]",
    "Total PM tasks",
    "Total CM tasks",
    "Maintenance interruptions",
    "Avg. total cost [$K]",
    "Cost inc. from optimal [$K]",
    "Median total cost [$K]",
)
EXTRA_ROWS = ("Q1 total cost [$K]", "Q3 total cost [$K]")


class ReportError(ValueError):
    pass


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)  # shortest string that parses back to the same float


@dataclass
class OmLedger:
    strategy: str
    experiment: int
    start_day: int
    seed: int
    vessel_rentals: int = 0
    total_downtime: float = 0.0
    access_downtime: float = 0.0
    failure_downtime: float = 0.0
    maintenance_downtime: float = 0.0
    production_loss: float = 0.0  # MWh
    revenue_loss: float = 0.0
    pm: int = 0
    cm: int = 0
    interruptions: int = 0
    n_rolls: int = 0
    costs: dict = field(default_factory=lambda: {k: 0.0 for k in COST_CATEGORIES})

    @property
    def total_cost(self) -> float:
        return float(sum(self.costs[k] for k in COST_CATEGORIES))


def ledger_rows(records, strategy: str, experiment: int, start_day: int, seed: int) -> list[dict]:
    rows = []
    for r in records:
        row = {
            "strategy": strategy, "experiment": experiment, "start_day": start_day, "seed": seed,
            "roll": r.roll, "day": r.day, "vessel": r.vessel, "pm": r.pm, "cm": r.cm,
            "interruptions": int(r.interrupted.sum()), "crew_hours": r.crew_hours,
            "overtime_hours": r.overtime, "spot_hours": r.spot_hours, "spot_crews": r.spot_crews,
            "downtime_h": r.downtime, "failure_downtime_h": r.failure_downtime,
            "maintenance_downtime_h": r.maintenance_downtime, "access_downtime_h": r.access_downtime,
            "energy_mwh": r.energy, "energy_lost_mwh": r.energy_lost, "revenue": r.revenue,
            "total_cost": r.total_cost, "status": r.decision_status, "gap": r.gap,
        }
        for cat, col in CATEGORY_COLUMNS.items():
            row[col] = r.costs[cat]
        rows.append(row)
    return rows


def ledger_from_rows(rows: list[dict]) -> OmLedger:
    if not rows:
        raise ReportError("ledger has no rolls")
    first = rows[0]
    led = OmLedger(str(first["strategy"]), int(first["experiment"]), int(first["start_day"]), int(first["seed"]))
    for row in rows:
        led.vessel_rentals += int(float(row["vessel"]))
        led.total_downtime += float(row["downtime_h"])
        led.access_downtime += float(row["access_downtime_h"])
        led.failure_downtime += float(row["failure_downtime_h"])
        led.maintenance_downtime += float(row["maintenance_downtime_h"])
        led.production_loss += float(row["energy_lost_mwh"])
        led.revenue_loss += float(row["revenue_loss"])
        led.pm += int(float(row["pm"]))
        led.cm += int(float(row["cm"]))
        led.interruptions += int(float(row["interruptions"]))
        led.n_rolls += 1
        for cat, col in CATEGORY_COLUMNS.items():
            led.costs[cat] += float(row[col])
    return led


def ledger_from_records(records, strategy: str, experiment: int = 0, start_day: int = 0, seed: int = 0) -> OmLedger:
    return ledger_from_rows(ledger_rows(records, strategy, experiment, start_day, seed))


def write_ledger_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for row in rows:
            w.writerow([_num(row[c]) if isinstance(row[c], (float, np.floating)) else row[c] for c in LEDGER_COLUMNS])


def read_ledger_csv(path) -> OmLedger:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = set(LEDGER_COLUMNS) - set(rows[0] if rows else LEDGER_COLUMNS)
    if missing:
        raise ReportError(f"{path}: missing columns {sorted(missing)}")
    return ledger_from_rows(rows)


@dataclass
class MetricTable:
    strategies: list[str]
    rows: list[tuple[str, list[float]]]
    reference: str | None = None

    def value(self, metric: str, strategy: str) -> float:
        for name, vals in self.rows:
            if name == metric:
                return vals[self.strategies.index(strategy)]
        raise KeyError(metric)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricTable) or self.strategies != other.strategies:
            return False
        if [n for n, _ in self.rows] != [n for n, _ in other.rows]:
            return False
        return all(np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)
                   for (_, a), (_, b) in zip(self.rows, other.rows))


def improvement(reference_median: float, other_median: float) -> float:
    """Percentage by which the reference median undercuts another strategy's median."""
    if other_median == 0:
        return 0.0 if reference_median == 0 else math.nan
    return 100.0 * (other_median - reference_median) / other_median


def summarize(ledgers: dict[str, list[OmLedger]], reference: str | None = "stochos") -> MetricTable:
    """Mean O&M metrics, cost quantiles and median improvements per strategy.

    The "optimal" cost of an experiment is the cheapest strategy on that
    experiment, so the increase-from-optimal row needs experiments shared
    across strategies (matched by experiment index).
    """
    if not ledgers or any(len(v) == 0 for v in ledgers.values()):
        raise ReportError("need at least one ledger per strategy")
    names = list(ledgers)
    if reference not in names:
        reference = None
    per_exp: dict[int, list[float]] = {}
    for leds in ledgers.values():
        for led in leds:
            per_exp.setdefault(led.experiment, []).append(led.total_cost)
    best = {e: min(v) for e, v in per_exp.items()}

    def mean(fn, leds):
        return float(np.mean([fn(x) for x in leds]))

    cols = []
    for name in names:
        leds = ledgers[name]
        costs = np.array([x.total_cost for x in leds]) / 1e3
        q1, med, q3 = np.percentile(costs, [25, 50, 75])
        cols.append([
            mean(lambda x: x.vessel_rentals, leds),
            mean(lambda x: x.total_downtime, leds),
            mean(lambda x: x.access_downtime, leds),
            mean(lambda x: x.production_loss, leds),
            mean(lambda x: x.revenue_loss, leds) / 1e3,
            mean(lambda x: x.pm, leds),
            mean(lambda x: x.cm, leds),
            mean(lambda x: x.interruptions, leds),
            float(costs.mean()),
            mean(lambda x: x.total_cost - best[x.experiment], leds) / 1e3,
            float(med),
            float(q1),
            float(q3),
        ])
    row_names = list(METRIC_ROWS) + list(EXTRA_ROWS)
    rows = [(row_names[k], [c[k] for c in cols]) for k in range(len(row_names))]
    if reference is not None:
        ref_med = cols[names.index(reference)][10]
        rows.append((f"Improvement of {reference} [%]", [improvement(ref_med, c[10]) for c in cols]))
    return MetricTable(names, rows, reference)


def _csv_text(table: MetricTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric"] + table.strategies)
    for name, vals in table.rows:
        w.writerow([name] + [_num(v) for v in vals])
    return buf.getvalue()


def _markdown_text(table: MetricTable) -> str:
    lines = ["| Metric | " + " | ".join(table.strategies) + " |",
             "|---|" + "---:|" * len(table.strategies)]
    for name, vals in table.rows:
        lines.append(f"| {name} | " + " | ".join("nan" if math.isnan(v) else f"{v:.2f}" for v in vals) + " |")
    return "\n".join(lines) + "\n"


def _json_text(table: MetricTable) -> str:
    doc = {s: {name: (None if math.isnan(vals[k]) else vals[k]) for name, vals in table.rows}
           for k, s in enumerate(table.strategies)}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def render(table: MetricTable, fmt: str) -> str:
    if fmt == "csv":
        return _csv_text(table)
    if fmt == "markdown":
        return _markdown_text(table)
    if fmt == "json":
        return _json_text(table)
    raise ReportError(f"unknown format {fmt!r}")


def emit(table: MetricTable, fmt: str, path) -> None:
    text = render(table, fmt)
    with Path(path).open("w", newline="") as fh:
        fh.write(text)


def parse_csv(path) -> MetricTable:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [(r[0], [float(v) for v in r[1:]]) for r in reader]
    ref = None
    for name, _ in rows:
        if name.startswith("Improvement of "):
            ref = name[len("Improvement of "):-len(" [%]")]
    return MetricTable(header[1:], rows, ref)


def write_boxplot_csv(ledgers: dict[str, list[OmLedger]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "experiment", "total_cost"])
        for name, leds in ledgers.items():
            for led in sorted(leds, key=lambda x: x.experiment):
                w.writerow([name, led.experiment, _num(led.total_cost)])
