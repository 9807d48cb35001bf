"""
Rolling-horizon comparison of maintenance strategies
====================================================

Roll each strategy over a few experiment windows on the sample site and
summarise costs.  Scenario count is kept small so the script runs in a few
minutes; the acceptance suite runs the full-size ensemble.
"""
from __future__ import annotations

from dataclasses import replace

from stochos import metrics
from stochos.benchmarks import ForecastCache, Strategy
from stochos.cli import SAMPLE_DATA, experiment_seed, experiment_windows
from stochos.data import load_config, load_dataset
from stochos.rolling import run_experiment

params, fleet = load_config(SAMPLE_DATA / "config.json")
params = replace(params, N_S=10)
dataset = load_dataset(SAMPLE_DATA)
cache = ForecastCache(dataset)  # fits depend only on (channel, day), so strategies share them

strategies = ("pk-host", "stochos", "pf-host", "cbs", "cms")
windows = experiment_windows(3, 6, first_day=30)

#####################################################################
# Rolling
# -------
# Every roll plans the day ahead, executes the starts against realized
# weather, and carries unfinished work into the next day.

ledgers = {}
for k, start in enumerate(windows):
    seed = experiment_seed(0, k)
    for name in strategies:
        res = run_experiment(dataset, fleet, params, Strategy(name), start, seed, cache)
        led = metrics.ledger_from_records(res.records, name, k, start, seed)
        ledgers.setdefault(name, []).append(led)
        gantt = ", ".join(f"WT{r['turbine']}@{r['start_hour'] - 24 * start}h" for r in res.schedule)
        print(f"exp {k} {name:8s} rolls {len(res.records):2d} cost {led.total_cost / 1e3:7.2f}K  {gantt}")

#####################################################################
# Summary
# -------
# Cost increase from optimal compares each strategy with the cheapest one
# on the same window.

print()
print(metrics.render(metrics.summarize(ledgers, reference="stochos"), "markdown"))
