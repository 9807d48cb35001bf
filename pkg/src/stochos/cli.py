"""Command-line entry point.

    stochos run --strategy stochos --experiments 5 --out runs/
    stochos report --in runs/ --format markdown --out report.md
    stochos compare --strategies pk-host,stochos,cms --experiments 5 --out cmp/
    stochos dump-scenarios --day 40 --out scen.csv --dump-moments moments.csv
    stochos dump-lp --day 40 --out roll.lp
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import benchmarks, metrics
from .benchmarks import ForecastCache, RollContext, SolverOptions, Strategy
from .data import ConfigError, DataError, FleetConfig, OperationalParams, load_config, load_dataset
from .fleet import FleetState
from .milp import build, solve, to_lp
from .rolling import HorizonExhausted, run_experiment
from .scenario import dump_moments, dump_scenarios

logger = logging.getLogger("stochos")

SAMPLE_DATA = Path(__file__).parent / "sample_data"
DEFAULT_FIRST_DAY = 30  # enough history for the hourly and daily residual models
SOLVER_ENV = "STOCHOS_SOLVER"


@dataclass(frozen=True)
class RunManifest:
    config: str | None
    data_dir: str
    strategy: str
    seed: int = 0
    experiments: int = 1
    stride: int = 1
    first_day: int = DEFAULT_FIRST_DAY
    out: str = "."
    backend: str = "highs"
    gap: float = 1e-3
    time_limit: float | None = None
    cbs_buffer: int = 3
    jobs: int = 1
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.strategy


def experiment_windows(n: int, stride: int, first_day: int = 0) -> list[int]:
    if n < 1 or stride < 1:
        raise ConfigError("experiments", "need at least one experiment and a stride >= 1")
    return [first_day + k * stride for k in range(n)]


def experiment_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1)[0])


def _load(manifest: RunManifest):
    if manifest.config:
        params, fleet = load_config(manifest.config)
    else:
        params, fleet = OperationalParams(), FleetConfig()
    params = replace(params, gap=manifest.gap)
    dataset = load_dataset(manifest.data_dir)
    return params, fleet, dataset


def _run_one(manifest: RunManifest, k: int, start: int) -> tuple[int, str | None]:
    params, fleet, dataset = _load(manifest)
    strategy = Strategy(manifest.strategy, manifest.cbs_buffer)
    options = SolverOptions(manifest.backend, manifest.gap, manifest.time_limit)
    seed = experiment_seed(manifest.seed, k)
    out = Path(manifest.out)
    stem = f"{manifest.name}_exp{k:03d}"
    error = None
    try:
        result = run_experiment(dataset, fleet, params, strategy, start, seed, ForecastCache(dataset), options)
        records, schedule = result.records, result.schedule
    except HorizonExhausted as exc:
        records, schedule, error = exc.records, exc.schedule, str(exc)
    rows = metrics.ledger_rows(records, manifest.name, k, start, seed)
    metrics.write_ledger_csv(rows, out / f"{stem}_ledger.csv")
    with (out / f"{stem}_schedule.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["turbine", "start_hour", "end_hour", "interrupted"])
        for row in schedule:
            w.writerow([row["turbine"], row["start_hour"], row["end_hour"], row["interrupted"]])
    return k, error


def cmd_run(manifest: RunManifest) -> int:
    """Run an ensemble; one ledger and one schedule CSV per experiment."""
    params, _, dataset = _load(manifest)
    Strategy(manifest.strategy, manifest.cbs_buffer)
    windows = experiment_windows(manifest.experiments, manifest.stride, manifest.first_day)
    last = windows[-1] + params.N_D + 1
    if last > dataset.n_days:
        raise ConfigError("experiments", f"window starting day {windows[-1]} needs {last} days; dataset has {dataset.n_days}")
    Path(manifest.out).mkdir(parents=True, exist_ok=True)
    jobs = max(1, manifest.jobs)
    if jobs == 1:
        results = [_run_one(manifest, k, s) for k, s in enumerate(windows)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, manifest, k, s) for k, s in enumerate(windows)]
            results = [f.result() for f in futures]
    failed = [(k, err) for k, err in results if err]
    for k, err in failed:
        _report_error("HorizonExhausted", f"experiment {k}: {err}")
    return 3 if failed else 0


def load_ledgers(directory) -> dict[str, list[metrics.OmLedger]]:
    paths = sorted(Path(directory).glob("*_ledger.csv"))
    if not paths:
        raise metrics.ReportError(f"no ledger CSV files in {directory}")
    out: dict[str, list[metrics.OmLedger]] = {}
    for path in paths:
        led = metrics.read_ledger_csv(path)
        out.setdefault(led.strategy, []).append(led)
    for leds in out.values():
        leds.sort(key=lambda x: x.experiment)
    return out


def check_matched(ledgers: dict[str, list[metrics.OmLedger]]) -> None:
    """Strategies must cover the same experiments on the same windows and seeds."""
    keys = {name: [(x.experiment, x.start_day, x.seed) for x in leds] for name, leds in ledgers.items()}
    first = next(iter(keys.values()))
    for name, k in keys.items():
        if k != first:
            raise ConfigError("windows", f"strategy {name} was run on different experiment windows or seeds")


def cmd_report(directory, fmt: str, out, reference: str | None = "stochos", boxplot=None) -> int:
    ledgers = load_ledgers(directory)
    table = metrics.summarize(ledgers, reference)
    metrics.emit(table, fmt, out)
    if boxplot:
        metrics.write_boxplot_csv(ledgers, boxplot)
    return 0


def _labels(strategies: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    labels = []
    for s in strategies:
        seen[s] = seen.get(s, 0) + 1
        labels.append(s if seen[s] == 1 else f"{s}#{seen[s]}")
    return labels


def cmd_compare(base: RunManifest, strategies: list[str], fmt: str = "markdown", report=None) -> int:
    if len(strategies) < 2:
        raise ConfigError("strategies", "compare needs at least two strategies")
    labels = _labels(strategies)
    code = 0
    for strategy, label in zip(strategies, labels):
        code = max(code, cmd_run(replace(base, strategy=strategy, label=label)))
    ledgers = load_ledgers(base.out)
    ledgers = {label: ledgers[label] for label in labels}
    check_matched(ledgers)
    reference = "stochos" if "stochos" in labels else labels[0]
    table = metrics.summarize(ledgers, reference)
    report = report or Path(base.out) / f"comparison.{ 'md' if fmt == 'markdown' else fmt}"
    metrics.emit(table, fmt, report)
    metrics.write_boxplot_csv(ledgers, Path(base.out) / "boxplot.csv")
    return code


def _roll_inputs(manifest: RunManifest, day: int):
    params, fleet_cfg, dataset = _load(manifest)
    fleet = FleetState.initial(fleet_cfg)
    strategy = Strategy(manifest.strategy, manifest.cbs_buffer)
    if not strategy.uses_milp:
        raise ConfigError("strategy", f"{strategy.kind} does not build a model")
    if not strategy.stochastic:
        params = replace(params, N_S=1)
    dataset.require_window(day, params.N_D + 1)
    ctx = RollContext(dataset, day, fleet, params, np.random.SeedSequence([manifest.seed, 0]), ForecastCache(dataset))
    return ctx, strategy


def cmd_dump_scenarios(manifest: RunManifest, day: int, out, moments_path=None) -> int:
    ctx, strategy = _roll_inputs(manifest, day)
    traj = benchmarks.make_inputs(strategy.kind, ctx)
    dump_scenarios(traj, out)
    if moments_path:
        if strategy.kind == "md-stochos":
            moments = {ch: benchmarks.residual_marginals(ctx.dataset, ch, day, ctx.params.N_D)
                       for ch in ("wind", "wave", "price")}
        else:
            moments = {ch: (ctx.forecasts(ch).sth, ctx.forecasts(ch).lth) for ch in ("wind", "wave", "price")}
        dump_moments(moments, moments_path)
    return 0


def cmd_dump_lp(manifest: RunManifest, day: int, out, solve_too: bool = False) -> int:
    ctx, strategy = _roll_inputs(manifest, day)
    traj = benchmarks.make_inputs(strategy.kind, ctx)
    instance = build(benchmarks.roll_data(traj, ctx.fleet, ctx.params))
    to_lp(instance, out)
    if solve_too:
        res = solve(instance, manifest.backend, manifest.gap, manifest.time_limit)
        print(json.dumps({"status": res.status, "objective": res.objective, "gap": res.gap}))
    return 0


def _report_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _add_run_options(p: argparse.ArgumentParser, strategy: bool = True) -> None:
    p.add_argument("--config", help="JSON parameter file (defaults apply when omitted)")
    p.add_argument("--data-dir", default=str(SAMPLE_DATA), help="directory with wind.csv, wave.csv, price.csv")
    if strategy:
        p.add_argument("--strategy", default="stochos", choices=benchmarks.KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experiments", type=int, default=1)
    p.add_argument("--stride", type=int, default=1, help="days between experiment start dates")
    p.add_argument("--first-day", type=int, default=DEFAULT_FIRST_DAY, help="dataset day of the first window")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gap", type=float, default=1e-3)
    p.add_argument("--time-limit", type=float, default=None, help="seconds per solve")
    p.add_argument("--solver", default=os.environ.get(SOLVER_ENV, "highs"), choices=("highs", "enumerate"))
    p.add_argument("--cbs-buffer", type=int, default=3)
    p.add_argument("--out", default=".")


def _manifest(args, strategy=None) -> RunManifest:
    return RunManifest(
        config=args.config, data_dir=args.data_dir, strategy=strategy or args.strategy, seed=args.seed,
        experiments=args.experiments, stride=args.stride, first_day=args.first_day, out=args.out,
        backend=args.solver, gap=args.gap, time_limit=args.time_limit, cbs_buffer=args.cbs_buffer, jobs=args.jobs,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochos", description="Stochastic opportunistic maintenance scheduling")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-roll solver gap and wall time")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an ensemble of experiments for one strategy")
    _add_run_options(run)

    rep = sub.add_parser("report", help="summarize ledger CSVs")
    rep.add_argument("--in", dest="input", required=True)
    rep.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    rep.add_argument("--out", required=True)
    rep.add_argument("--reference", default="stochos")
    rep.add_argument("--boxplot", help="also write strategy,experiment,total_cost CSV")

    cmp_ = sub.add_parser("compare", help="run several strategies on shared windows and compare")
    _add_run_options(cmp_, strategy=False)
    cmp_.add_argument("--strategies", required=True, help="comma-separated list, at least two")
    cmp_.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    cmp_.add_argument("--report")

    for name, help_ in (("dump-scenarios", "write one roll's scenario trajectories"),
                        ("dump-lp", "write one roll's model in LP format")):
        p = sub.add_parser(name, help=help_)
        _add_run_options(p)
        p.add_argument("--day", type=int, default=DEFAULT_FIRST_DAY)
        if name == "dump-scenarios":
            p.add_argument("--dump-moments", help="also write predictive means and standard deviations")
        else:
            p.add_argument("--solve", action="store_true", help="solve the dumped model and print a summary")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            return cmd_run(_manifest(args))
        if args.command == "report":
            return cmd_report(args.input, args.format, args.out, args.reference, args.boxplot)
        if args.command == "compare":
            strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
            for s in strategies:
                Strategy(s)
            return cmd_compare(_manifest(args, strategy=strategies[0] if strategies else "stochos"),
                               strategies, args.format, args.report)
        if args.command == "dump-scenarios":
            return cmd_dump_scenarios(_manifest(args), args.day, args.out, args.dump_moments)
        if args.command == "dump-lp":
            return cmd_dump_lp(_manifest(args), args.day, args.out, args.solve)
    except (ConfigError, DataError, metrics.ReportError, benchmarks.InputError) as exc:
        _report_error(type(exc).__name__, str(exc))
        return 2
    except (OSError, RuntimeError, ValueError) as exc:
        _report_error(type(exc).__name__, str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
