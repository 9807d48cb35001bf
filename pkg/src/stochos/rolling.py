"""Rolling-horizon loop and the realized-data executor.

Each roll plans the day ahead (plus a tentative LTH plan), executes only
the day-ahead starts against what actually happened, then rolls the fleet
state forward one day.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import ForecastCache, RollContext, SolverOptions, Strategy, plan
from .fleet import NO_START, FleetState, ScheduleDecision
from .scenario import access_state, mission_times, shift_mask, wind_to_power

logger = logging.getLogger(__name__)

COST_CATEGORIES = ("repair", "vessel", "crew", "overtime", "spot", "revenue_loss")
MAX_ROLLS = 120


class HorizonExhausted(RuntimeError):
    """The data ran out before every task finished."""

    def __init__(self, message: str, records, schedule):
        super().__init__(message)
        self.records = records
        self.schedule = schedule


@dataclass(frozen=True)
class RealizedDay:
    access: np.ndarray  # (24,) 0/1, missing data counts as inaccessible
    shift: np.ndarray  # (24,) 0/1 crew shift hours
    f: np.ndarray  # (24,) normalised power, 0 where missing
    price: np.ndarray  # (24,) 0 where missing

    @classmethod
    def from_dataset(cls, dataset, day: int, params) -> "RealizedDay":
        sl = slice(24 * day, 24 * (day + 1))
        wind = dataset.measured["wind"][sl]
        wave = dataset.measured["wave"][sl]
        price = dataset.measured["price"][sl]
        if len(wind) < 24:
            raise IndexError(f"no realized data for day {day}")
        ok = np.isfinite(wind) & np.isfinite(wave)
        access = access_state(np.nan_to_num(wind), np.nan_to_num(wave), params.nu_max, params.eta_max)
        access = np.where(ok, access, 0).astype(np.int8)
        f = wind_to_power(np.nan_to_num(wind), params.cut_in, params.rated_speed, params.cut_out)
        f = np.where(np.isfinite(wind), f, 0.0)
        return cls(access, shift_mask(24, params.t_R, params.t_D), f, np.nan_to_num(price, nan=0.0))

    @property
    def workable(self) -> np.ndarray:
        return self.access * self.shift


@dataclass(frozen=True)
class ExecutionRecord:
    roll: int
    day: int
    start_hour: np.ndarray  # (N_I,) 1..24 or 0
    access: np.ndarray  # (24,)
    shift: np.ndarray  # (24,)
    mission_time: np.ndarray  # (N_I,) realized, NaN where not started
    completed: np.ndarray  # (N_I,) bool
    interrupted: np.ndarray  # (N_I,) bool, started or resumed but unfinished at hour 24
    worked: np.ndarray  # (N_I,) accessible hours worked today
    down: np.ndarray  # (24, N_I) bool, turbine not producing
    down_maintenance: np.ndarray  # (24, N_I) bool, subset of down caused by an open task
    costs: dict
    energy: float  # MWh produced
    energy_lost: float  # MWh lost to unavailability
    revenue: float
    pm: int
    cm: int
    vessel: int
    crew_hours: float
    overtime: float
    spot_hours: float
    spot_crews: int
    decision_status: str = "rule"
    gap: float = math.nan
    wall_time: float = 0.0

    @property
    def total_cost(self) -> float:
        return float(sum(self.costs[k] for k in COST_CATEGORIES))

    @property
    def failure_downtime(self) -> float:
        return float((self.down & ~self.down_maintenance).sum())

    @property
    def maintenance_downtime(self) -> float:
        return float(self.down_maintenance.sum())

    @property
    def downtime(self) -> float:
        return float(self.down.sum())

    @property
    def access_downtime(self) -> float:
        """Maintenance downtime hours inside the shift lost to bad access."""
        blocked = (self.shift == 1) & (self.access == 0)
        return float((self.down_maintenance & blocked[:, None]).sum())


def execute(decision: ScheduleDecision, realized: RealizedDay, fleet: FleetState, params,
            roll: int = 0, day: int = 0) -> tuple[ExecutionRecord, FleetState]:
    """Run the day-ahead starts against realized conditions."""
    n_i = fleet.n_turbines
    hours = np.arange(1, 25)
    cap = params.big_m
    starts = np.asarray(decision.start_hour, int)
    if np.any(starts[fleet.theta == 0] != NO_START):
        raise ValueError("schedule starts a task on a turbine without a pending task")

    mission = np.full(n_i, np.nan)
    completed = np.zeros(n_i, bool)
    worked = np.zeros(n_i)
    under = np.zeros((24, n_i), bool)  # crew assigned / turbine being worked on
    crew = np.zeros((24, n_i), bool)
    tau_rem = fleet.tau_remaining.copy()
    repair = 0.0
    pm = cm = 0
    for i in np.flatnonzero(starts):
        t0 = starts[i]
        a = mission_times(realized.workable[t0 - 1:], int(tau_rem[i]), cap)[0]
        mission[i] = a
        end = int(min(t0 + a - 1, 24))
        under[t0 - 1:end, i] = True
        crew[:, i] = under[:, i] & (hours < params.t_D)
        done = float(realized.workable[t0 - 1:end].sum())
        worked[i] = done
        if a <= 25 - t0:
            completed[i] = True
            tau_rem[i] = 0
        else:
            tau_rem[i] -= int(done)
        if not fleet.rho[i]:
            if fleet.zeta[i]:
                repair += params.K
                pm += 1
            else:
                repair += params.Phi
                cm += 1
    interrupted = (starts != NO_START) & ~completed

    # availability: failed or mid-task turbines are down until their task completes
    down = np.zeros((24, n_i), bool)
    down_maint = np.zeros((24, n_i), bool)
    for i in range(n_i):
        open_task = bool(fleet.rho[i]) or starts[i] != NO_START
        if completed[i]:
            end = int(starts[i] + mission[i] - 1)
            if fleet.rho[i]:
                down_maint[:end, i] = True
            elif not fleet.zeta[i]:
                down[:starts[i] - 1, i] = True
                down_maint[starts[i] - 1:end, i] = True
            else:
                down_maint[starts[i] - 1:end, i] = True
        elif open_task:
            if fleet.rho[i]:
                down_maint[:, i] = True
            else:
                down[:starts[i] - 1, i] = not fleet.zeta[i]
                down_maint[starts[i] - 1:, i] = True
        elif not fleet.zeta[i]:
            down[:, i] = True
    down |= down_maint

    up = ~down
    gen_each = params.R * realized.f[:, None] * up
    farm_cap = n_i * params.R * realized.f * params.curtailment
    produced = np.minimum(gen_each.sum(axis=1), farm_cap)
    lost = params.R * realized.f[:, None] * down
    revenue = float(realized.price @ produced)
    revenue_loss = float(realized.price @ lost.sum(axis=1))

    crew_hours = float(crew.sum())
    excess = max(0, math.ceil(crew_hours - params.B * params.W - 1e-9))
    overtime = min(float(params.H), float(excess)) if params.Q <= params.C2 else 0.0
    spot_hours = excess - overtime
    spot_crews = int(max(0, crew.sum(axis=1).max() - params.B))
    vessel = int(bool(np.any(starts)))
    costs = {
        "repair": repair,
        "vessel": params.Omega * vessel,
        "crew": params.Psi * crew_hours,
        "overtime": params.Q * overtime,
        "spot": params.C1 * spot_crews + params.C2 * spot_hours,
        "revenue_loss": revenue_loss,
    }
    record = ExecutionRecord(
        roll=roll, day=day, start_hour=starts.copy(), access=realized.access.copy(), shift=realized.shift.copy(),
        mission_time=mission,
        completed=completed, interrupted=interrupted, worked=worked, down=down, down_maintenance=down_maint,
        costs=costs, energy=float(produced.sum()), energy_lost=float(lost.sum()), revenue=revenue,
        pm=pm, cm=cm, vessel=vessel, crew_hours=crew_hours, overtime=overtime, spot_hours=float(spot_hours),
        spot_crews=spot_crews, decision_status=decision.status, gap=decision.gap, wall_time=decision.wall_time,
    )
    return record, advance(fleet, starts, completed, tau_rem)


def advance(fleet: FleetState, starts, completed, tau_rem) -> FleetState:
    """Roll the state one day forward.

    Completed tasks renew the turbine (no further failure inside the
    experiment); residual lives of the others shrink by one day.
    """
    started = np.asarray(starts) != NO_START
    theta = fleet.theta.copy()
    rho = fleet.rho.copy()
    theta[completed] = 0
    rho[completed] = 0
    rho[started & ~completed] = 1
    lt = np.maximum(fleet.lambda_true - 1.0, 0.0)
    lh = np.maximum(fleet.lambda_hat - 1.0, 0.0)
    lt[completed] = np.inf
    lh[completed] = np.inf
    zeta = np.where(np.isfinite(lt), (lt > 0), 1).astype(np.int8)
    tau_rem = np.where(completed, 0, tau_rem)
    return fleet.evolve(theta=theta, rho=rho, zeta=zeta, tau_remaining=tau_rem, lambda_true=lt, lambda_hat=lh)


def run_roll(j: int, dataset, fleet: FleetState, params, strategy: Strategy, start_day: int = 0,
             seed: int = 0, cache: ForecastCache | None = None,
             options: SolverOptions = SolverOptions(),
             observer=None) -> tuple[ScheduleDecision, ExecutionRecord, FleetState]:
    """Plan, execute and advance one day.

    ``observer(decision)`` sees MILP decisions with the built instance and raw
    solve result attached under ``extra``; both are dropped afterwards.
    """
    if fleet.theta.sum() == 0:
        raise ValueError("no pending tasks")
    day = start_day + j
    dataset.require_window(day, params.N_D + 1)
    roll_seed = np.random.SeedSequence([int(seed), int(j)])
    ctx = RollContext(dataset, day, fleet, params, roll_seed, cache, {"roll": j, "keep_instance": observer is not None})
    decision = plan(strategy, ctx, options)
    if observer is not None:
        observer(decision)
        decision.extra.pop("instance", None)
        decision.extra.pop("result", None)
    realized = RealizedDay.from_dataset(dataset, day, params)
    record, nxt = execute(decision, realized, fleet, params, roll=j, day=day)
    nxt.check()
    return decision, record, nxt


@dataclass
class ExperimentResult:
    strategy: str
    start_day: int
    seed: int
    records: list = field(default_factory=list)
    schedule: list = field(default_factory=list)  # Gantt rows
    decisions: list = field(default_factory=list)
    final_state: FleetState | None = None


def schedule_rows(record: ExecutionRecord) -> list[dict]:
    rows = []
    for i in np.flatnonzero(record.start_hour):
        t0 = int(record.start_hour[i])
        end = int(min(t0 + record.mission_time[i] - 1, 24))
        rows.append({
            "turbine": i + 1,
            "start_hour": 24 * record.day + t0 - 1,
            "end_hour": 24 * record.day + end,
            "interrupted": int(record.interrupted[i]),
        })
    return rows


def run_experiment(dataset, fleet_config, params, strategy: Strategy, start_day: int, seed: int = 0,
                   cache: ForecastCache | None = None, options: SolverOptions = SolverOptions(),
                   max_rolls: int = MAX_ROLLS, observer=None) -> ExperimentResult:
    """Roll until every task completes; raises :class:`HorizonExhausted` otherwise."""
    fleet = FleetState.initial(fleet_config)
    result = ExperimentResult(strategy.kind, start_day, seed)
    cache = cache or ForecastCache(dataset)
    j = 0
    while fleet.theta.sum() > 0:
        day = start_day + j
        if j >= max_rolls or (day + params.N_D + 1) * 24 > dataset.n_hours:
            raise HorizonExhausted(
                f"{strategy.kind}: tasks still pending after {j} rolls from day {start_day}",
                result.records, result.schedule,
            )
        decision, record, fleet = run_roll(j, dataset, fleet, params, strategy, start_day, seed, cache, options,
                                            observer)
        result.decisions.append(decision)
        result.records.append(record)
        result.schedule.extend(schedule_rows(record))
        j += 1
    result.final_state = fleet
    logger.info("experiment strategy=%s start=%d rolls=%d cost=%.2f", strategy.kind, start_day, j,
                sum(r.total_cost for r in result.records))
    return result
