from __future__ import annotations

import math

import numpy as np
import pytest

from stochos.benchmarks import Strategy
from stochos.data import FleetConfig, OperationalParams
from stochos.fleet import FleetState, ScheduleDecision
from stochos.rolling import (
    COST_CATEGORIES, HorizonExhausted, RealizedDay, advance, execute, run_experiment, schedule_rows,
)
from stochos.scenario import shift_mask

P = OperationalParams()


def realized(access, f=0.5, price=40.0):
    return RealizedDay(np.asarray(access, np.int8), shift_mask(24, P.t_R, P.t_D), np.full(24, f), np.full(24, price))


def fleet(tau=(5,), lambda_true=(10.0,), lambda_hat=(10.0,)):
    return FleetState.initial(FleetConfig(tau=tau, lambda_true=lambda_true, lambda_hat=lambda_hat,
                                          xi=(2.0,) * len(tau)))


def decide(*starts):
    return ScheduleDecision(np.array(starts, int), int(any(starts)))


def test_task_completes_within_day():
    st = fleet()
    rec, nxt = execute(decide(6), realized(np.ones(24)), st, P)
    assert rec.completed[0] and not rec.interrupted[0]
    assert nxt.theta[0] == 0 and nxt.rho[0] == 0 and nxt.tau_remaining[0] == 0
    assert rec.costs["repair"] == P.K and rec.pm == 1 and rec.vessel == 1
    assert rec.crew_hours == 5


def test_partial_progress_sets_in_progress():
    st = fleet(tau=(5,))
    access = np.ones(24, np.int8)
    access[19] = 0  # hour 20 blocked
    rec, nxt = execute(decide(18), realized(access), st, P)
    # bit-string oracle: workable hours from 18 onward
    done = int((access * shift_mask(24, P.t_R, P.t_D))[17:].sum())
    assert done == 2
    assert nxt.rho[0] == 1 and nxt.theta[0] == 1
    assert nxt.tau_remaining[0] == 5 - done == 3
    assert rec.interrupted[0]


def test_failure_after_two_rolls_charges_cm():
    st = fleet(lambda_true=(2.0,))
    idle = decide(0)
    for _ in range(2):
        _, st = execute(idle, realized(np.ones(24)), st, P)
    assert st.zeta[0] == 0 and st.lambda_true[0] == 0
    rec, _ = execute(decide(6), realized(np.ones(24)), st, P)
    assert rec.costs["repair"] == P.Phi and rec.cm == 1 and rec.pm == 0


def test_resumed_task_not_charged_again():
    st = fleet(tau=(5,))
    access = np.ones(24, np.int8)
    _, st = execute(decide(19), realized(access), st, P)
    assert st.rho[0] == 1
    rec, nxt = execute(decide(6), realized(access), st, P)
    assert rec.costs["repair"] == 0 and rec.pm == 0
    assert nxt.theta[0] == 0


def test_start_on_idle_turbine_rejected():
    st = fleet().evolve(theta=np.zeros(1, np.int8))
    with pytest.raises(ValueError):
        execute(decide(6), realized(np.ones(24)), st, P)


def test_blocked_day_is_charged_and_idle():
    st = fleet()
    rec, nxt = execute(decide(6), realized(np.zeros(24)), st, P)
    assert rec.worked[0] == 0 and nxt.tau_remaining[0] == 5 and nxt.rho[0] == 1
    assert rec.access_downtime == 15  # shift hours 6..20 lost to access
    assert rec.crew_hours == 15


def test_overtime_and_spot_accounting():
    st = fleet(tau=(11, 11, 11), lambda_true=(9.0,) * 3, lambda_hat=(9.0,) * 3)
    rec, _ = execute(decide(6, 6, 6), realized(np.ones(24)), st, P)
    assert rec.crew_hours == 33
    assert rec.overtime == 8 and rec.spot_hours == 33 - 16 - 8
    assert rec.spot_crews == 1
    assert rec.costs["spot"] == P.C1 * 1 + P.C2 * 9


def test_ledger_conservation_and_downtime_split():
    st = fleet(tau=(4, 9), lambda_true=(0.0, 5.0), lambda_hat=(1.0, 5.0))
    access = np.ones(24, np.int8)
    access[8:11] = 0
    rec, _ = execute(decide(7, 14), realized(access, f=0.7, price=33.0), st, P)
    assert rec.total_cost == sum(rec.costs[k] for k in COST_CATEGORIES)
    assert rec.downtime == rec.failure_downtime + rec.maintenance_downtime
    assert 0 <= rec.access_downtime <= rec.downtime
    assert rec.failure_downtime == 6  # turbine 1 down before its repair starts
    lost = rec.down.sum() * P.R * 0.7
    assert rec.energy_lost == pytest.approx(lost)
    assert rec.costs["revenue_loss"] == pytest.approx(lost * 33.0)


def test_advance_renews_completed():
    st = fleet(tau=(3, 3), lambda_true=(4.0, 1.0), lambda_hat=(4.0, 1.0))
    nxt = advance(st, np.array([6, 0]), np.array([True, False]), np.array([0, 3]))
    assert math.isinf(nxt.lambda_true[0]) and nxt.zeta[0] == 1
    assert nxt.lambda_true[1] == 0 and nxt.zeta[1] == 0
    nxt.check()


def test_schedule_rows_absolute_hours():
    st = fleet(tau=(4,))
    rec, _ = execute(decide(6), realized(np.ones(24)), st, P, roll=0, day=3)
    assert schedule_rows(rec) == [{"turbine": 1, "start_hour": 77, "end_hour": 81, "interrupted": 0}]


def test_experiment_terminates_and_is_deterministic(small_dataset):
    cfg = FleetConfig()
    a = run_experiment(small_dataset, cfg, P, Strategy("cbs"), 30, seed=3)
    b = run_experiment(small_dataset, cfg, P, Strategy("cbs"), 30, seed=3)
    assert a.final_state.theta.sum() == 0
    assert a.schedule == b.schedule
    assert [r.total_cost for r in a.records] == [r.total_cost for r in b.records]
    assert sum(r.pm + r.cm for r in a.records) == cfg.n_turbines


def test_loop_stops_after_last_completion(small_dataset):
    cfg = FleetConfig(tau=(2,), lambda_true=(30.0,), lambda_hat=(1.0,), xi=(2.0,))
    res = run_experiment(small_dataset, cfg, P, Strategy("cbs"), 30)
    assert res.records[-1].completed.any()
    assert all(not r.completed.any() for r in res.records[:-1])


def test_horizon_exhausted_keeps_partial_ledger(small_dataset):
    cfg = FleetConfig(tau=(4,), lambda_true=(50.0,), lambda_hat=(50.0,), xi=(2.0,))
    with pytest.raises(HorizonExhausted) as exc:
        run_experiment(small_dataset, cfg, P, Strategy("cms"), 30)
    assert len(exc.value.records) > 0
