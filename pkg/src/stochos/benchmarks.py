"""Scheduling strategies: the stochastic model, its deterministic variants
and two rule-based baselines.

Every strategy turns the current fleet state and data into a
:class:`ScheduleDecision`; execution against realized data is shared
(see :mod:`stochos.rolling`).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fleet import NO_START, FleetState, ScheduleDecision
from .forecast import (
    LTH_WINDOW_DAYS, STH_WINDOW_HOURS, ChannelForecast, PredictiveMoments, RlModel, fit_channel,
)
from .milp import RollData, build, compute_penalties, solve
from .scenario import TrajectorySet, derive, sample_trajectories

logger = logging.getLogger(__name__)

KINDS = ("stochos", "pk-host", "pf-host", "cpf-host", "md-stochos", "cbs", "cms")
MILP_KINDS = ("stochos", "pk-host", "pf-host", "cpf-host", "md-stochos")
RL_CAP = 1e4  # stands in for "never fails" (renewed turbines)


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: str
    cbs_buffer: int = 3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown strategy {self.kind!r}; choose from {', '.join(KINDS)}")

    @property
    def stochastic(self) -> bool:
        return self.kind in ("stochos", "md-stochos")

    @property
    def uses_milp(self) -> bool:
        return self.kind in MILP_KINDS


@dataclass(frozen=True)
class SolverOptions:
    backend: str = "highs"
    gap: float = 1e-3
    time_limit: float | None = None


class ForecastCache:
    """GP fits keyed by (channel, absolute day, LTH length); fits depend on nothing else."""

    def __init__(self, dataset):
        self.dataset = dataset
        self._fits: dict = {}

    def get(self, channel: str, day: int, n_days: int) -> ChannelForecast:
        key = (channel, day, n_days)
        if key not in self._fits:
            self._fits[key] = fit_channel(self.dataset, channel, day, n_days)
        return self._fits[key]


@dataclass
class RollContext:
    dataset: object
    day: int  # absolute dataset day of the STH
    fleet: FleetState
    params: object
    seed: object = 0
    cache: ForecastCache | None = None
    extras: dict = field(default_factory=dict)

    def forecasts(self, channel: str) -> ChannelForecast:
        if self.cache is None:
            self.cache = ForecastCache(self.dataset)
        return self.cache.get(channel, self.day, self.params.N_D)


def _as_scenario(values) -> np.ndarray:
    return np.asarray(values, float).reshape(-1, 1)


def _status_adjusted_rl(fleet: FleetState, rl: np.ndarray) -> np.ndarray:
    """Failed turbines stay failed; renewed turbines never fail inside the horizon."""
    rl = np.array(rl, float)
    rl[fleet.zeta == 0] = 0.0
    rl[~np.isfinite(fleet.lambda_true)] = RL_CAP
    return np.minimum(rl, RL_CAP)


def _weather_block(ctx: RollContext, kind: str):
    """Hourly STH and daily LTH arrays of a realized or raw-forecast source."""
    ds, d, n_d = ctx.dataset, ctx.day, ctx.params.N_D
    src = ds.measured if kind == "measured" else ds.forecast
    out = {}
    for ch in ("wind", "wave", "price"):
        out[f"{ch}_sth"] = src[ch][24 * d:24 * (d + 1)].astype(float)
        out[f"{ch}_lth"] = ds.daily(kind, ch)[d + 1:d + 1 + n_d].astype(float)
    return out


def _fill_missing(block: dict, params) -> dict:
    """Missing hours become inaccessible with no production and zero price."""
    for res in ("sth", "lth"):
        bad = ~(np.isfinite(block[f"wind_{res}"]) & np.isfinite(block[f"wave_{res}"]))
        block[f"wind_{res}"] = np.where(bad, 0.0, block[f"wind_{res}"])
        block[f"wave_{res}"] = np.where(bad, params.eta_max + 1.0, block[f"wave_{res}"])
        block[f"price_{res}"] = np.nan_to_num(block[f"price_{res}"], nan=0.0)
    return block


def residual_marginals(dataset, channel: str, day: int, n_days: int) -> tuple[PredictiveMoments, PredictiveMoments]:
    """Independent Gaussian per lead from the residual sample mean and variance."""
    t0 = 24 * day
    lo = max(0, t0 - STH_WINDOW_HOURS)
    r = dataset.measured[channel][lo:t0] - dataset.forecast[channel][lo:t0]
    r = r[np.isfinite(r)]
    zhat = dataset.forecast[channel][t0:t0 + 24]
    sth = PredictiveMoments(zhat + r.mean(), np.diag(np.full(24, r.var())))
    dm, df = dataset.daily("measured", channel), dataset.daily("forecast", channel)
    dlo = max(0, day - LTH_WINDOW_DAYS)
    rd = dm[dlo:day] - df[dlo:day]
    rd = rd[np.isfinite(rd)]
    zd = df[day + 1:day + 1 + n_days]
    lth = PredictiveMoments(zd + rd.mean(), np.diag(np.full(n_days, rd.var())))
    return sth, lth


def make_inputs(kind: str, ctx: RollContext) -> TrajectorySet:
    """Scenario inputs for one of the MILP-based strategies."""
    p, fleet = ctx.params, ctx.fleet
    ds, d = ctx.dataset, ctx.day
    if kind == "pk-host":
        try:
            ds.require_window(d, p.N_D + 1)
        except Exception as exc:
            raise InputError(f"pk-host needs realized data for the whole horizon: {exc}") from None
        block = _fill_missing(_weather_block(ctx, "measured"), p)
        wind = ds.measured["wind"][24 * (d + 1):24 * (d + 1 + p.N_D)]
        wave = ds.measured["wave"][24 * (d + 1):24 * (d + 1 + p.N_D)]
        ok = np.isfinite(wind) & np.isfinite(wave)
        access = (ok & (np.nan_to_num(wind) <= p.nu_max) & (np.nan_to_num(wave) <= p.eta_max)).astype(np.int8)
        rl = _status_adjusted_rl(fleet, fleet.lambda_true)
        return TrajectorySet(**{k: _as_scenario(v) for k, v in block.items()},
                             rl=_as_scenario(rl), lth_hourly_access=_as_scenario(access))
    if kind == "pf-host":
        block = _fill_missing(_weather_block(ctx, "forecast"), p)
        rl = _status_adjusted_rl(fleet, fleet.lambda_hat)
        return TrajectorySet(**{k: _as_scenario(np.maximum(v, 0) if not k.startswith("price") else v)
                                for k, v in block.items()}, rl=_as_scenario(rl))
    if kind == "cpf-host":
        block = {}
        for ch in ("wind", "wave", "price"):
            fc = ctx.forecasts(ch)
            lo = 0.0 if ch != "price" else -np.inf
            block[f"{ch}_sth"] = _as_scenario(np.maximum(fc.sth.mean, lo))
            block[f"{ch}_lth"] = _as_scenario(np.maximum(fc.lth.mean, lo))
        rl = RlModel(np.minimum(fleet.lambda_hat, RL_CAP), fleet.xi).mean()
        return TrajectorySet(**block, rl=_as_scenario(_status_adjusted_rl(fleet, rl)))
    if kind in ("stochos", "md-stochos"):
        if kind == "stochos":
            moments = {ch: (ctx.forecasts(ch).sth, ctx.forecasts(ch).lth) for ch in ("wind", "wave", "price")}
        else:
            moments = {ch: residual_marginals(ds, ch, d, p.N_D) for ch in ("wind", "wave", "price")}
        rl_model = RlModel(np.minimum(fleet.lambda_hat, RL_CAP), fleet.xi)
        traj = sample_trajectories(moments, rl_model, p.N_S, ctx.seed)
        rl = np.stack([_status_adjusted_rl(fleet, traj.rl[:, s]) for s in range(traj.n_scenarios)], axis=1)
        return TrajectorySet(traj.wind_sth, traj.wave_sth, traj.price_sth, traj.wind_lth,
                             traj.wave_lth, traj.price_lth, rl)
    raise InputError(f"{kind} does not take scenario inputs")


def roll_data(traj: TrajectorySet, fleet: FleetState, params) -> RollData:
    derived = derive(traj, fleet.tau_remaining, params)
    return RollData(
        traj=traj, derived=derived,
        zeta=fleet.zeta.astype(float), rho=fleet.rho.astype(float),
        theta=fleet.theta.astype(float), tau=fleet.tau_remaining.astype(float),
        params=params, penalties=compute_penalties(traj, derived, params),
    )


def cbs_target_day(lambda_hat: float, buffer: int = 3) -> int:
    """Planned day (1 = today) for a condition-based task."""
    return max(1, math.ceil(lambda_hat - 1e-9) - buffer)


def rule_schedule(strategy: Strategy, fleet: FleetState, params) -> ScheduleDecision:
    """Condition-based or corrective dispatch for today.

    Due tasks start at first light.  Resumed tasks go first, then failed
    turbines, then by planned day; at most ``B`` tasks start per day and the
    rest stay due for the next day.
    """
    due = []
    for i in fleet.pending:
        resumed, failed = bool(fleet.rho[i]), fleet.zeta[i] == 0
        if strategy.kind == "cms":
            is_due, target = resumed or failed, 1
        else:
            target = cbs_target_day(fleet.lambda_hat[i], strategy.cbs_buffer)
            is_due = resumed or failed or target <= 1
        if is_due:
            due.append((0 if resumed else 1 if failed else 2, target, i))
    due.sort()
    starts = np.zeros(fleet.n_turbines, dtype=int)
    for _, _, i in due[: int(params.B)]:
        starts[i] = params.t_R if params.t_R >= 1 else 1
    return ScheduleDecision(starts, int(starts.any()), status="rule")


def spot_usage(instance, x, crews: int) -> dict:
    """Count rows that lean on spot contracting.

    Crew rows are the (t, s) pairs of the day-ahead, hour rows one per
    scenario for the day-ahead budget, and LTH hour rows one per (d, s).
    """
    busy = np.rint(instance.values(x, "x")).sum(axis=1)
    aq = np.rint(instance.values(x, "aq"))
    aql = np.rint(instance.values(x, "aqL"))
    return {
        "crew_rows": int(busy.size), "crew_exceed": int((busy > crews).sum()),
        "hour_rows": int(aq.size), "hour_exceed": int((aq > 0).sum()),
        "lth_hour_rows": int(aql.size), "lth_hour_exceed": int((aql > 0).sum()),
    }


def plan(strategy: Strategy, ctx: RollContext, options: SolverOptions = SolverOptions()) -> ScheduleDecision:
    if not strategy.uses_milp:
        return rule_schedule(strategy, ctx.fleet, ctx.params)
    p = ctx.params
    if not strategy.stochastic:
        p = replace(p, N_S=1)
        ctx = RollContext(ctx.dataset, ctx.day, ctx.fleet, p, ctx.seed, ctx.cache, ctx.extras)
    traj = make_inputs(strategy.kind, ctx)
    data = roll_data(traj, ctx.fleet, p)
    instance = build(data, roll=ctx.extras.get("roll", 0))
    result = solve(instance, options.backend, options.gap, options.time_limit)
    if result.x is None:
        raise RuntimeError(f"{strategy.kind}: roll on day {ctx.day} ended with status {result.status}")
    m = instance.values(result.x, "m")
    extra = {"spot": spot_usage(instance, result.x, p.B)}
    if ctx.extras.get("keep_instance"):
        extra.update(instance=instance, result=result)
    starts = np.zeros(ctx.fleet.n_turbines, dtype=int)
    for t, i in zip(*np.nonzero(m > 0.5)):
        starts[i] = t + 1
    logger.info("roll day=%d strategy=%s status=%s gap=%.2e wall=%.2fs objective=%.2f",
                ctx.day, strategy.kind, result.status, result.gap, result.wall_time, result.objective)
    return ScheduleDecision(
        start_hour=starts,
        r=int(round(float(instance.values(result.x, "r")))),
        mL=np.rint(instance.values(result.x, "mL")).astype(np.int8),
        rL=np.rint(instance.values(result.x, "rL")).astype(np.int8),
        objective=result.objective, gap=result.gap, wall_time=result.wall_time, status=result.status,
        extra=extra,
    )
