"""
One day-ahead decision
======================

Build and solve the two-stage model for a single day with scenario inputs,
compare it with the point-forecast plan, and check the solution against
the independent constraint checker.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from stochos.benchmarks import ForecastCache, RollContext, Strategy, make_inputs, roll_data
from stochos.checker import check, unpack
from stochos.cli import SAMPLE_DATA
from stochos.data import load_config, load_dataset
from stochos.fleet import FleetState
from stochos.milp import build, solve, to_lp

params, fleet_cfg = load_config(SAMPLE_DATA / "config.json")
params = replace(params, N_S=20)
dataset = load_dataset(SAMPLE_DATA)
fleet = FleetState.initial(fleet_cfg)
cache = ForecastCache(dataset)
day = 30

print("turbine  tau  lambda_hat  lambda_true  operating")
for i in range(fleet.n_turbines):
    print(f"{i + 1:7d} {fleet.tau_remaining[i]:4d} {fleet.lambda_hat[i]:11.1f} {fleet.lambda_true[i]:12.1f} "
          f"{int(fleet.zeta[i]):10d}")

#####################################################################
# Scenario model
# --------------
# The model has first-stage starts for today and scenario-indexed LTH
# recourse.  Its size grows linearly with the scenario count.

ctx = RollContext(dataset, day, fleet, params, np.random.SeedSequence([0, 0]), cache, {"roll": 0})
data = roll_data(make_inputs("stochos", ctx), fleet, params)
inst = build(data)
print(f"\nvariables {inst.A.shape[1]}, rows {inst.A.shape[0]}, nonzeros {inst.A.nnz}")
res = solve(inst, gap=params.gap)
m = inst.values(res.x, "m")
starts = {int(i) + 1: int(t) + 1 for t, i in zip(*np.nonzero(m > 0.5))}
print(f"status {res.status}, gap {res.gap:.1e}, {res.wall_time:.1f} s, objective {res.objective:,.0f}")
print("day-ahead starts (turbine: hour):", starts or "none")
mL = np.rint(inst.values(res.x, "mL"))
print("share of scenarios planning each turbine in the LTH:", np.round(mL.sum(axis=0).mean(axis=1), 2))

#####################################################################
# Independent check
# -----------------
# The checker rebuilds every constraint from the roll data in its original
# form and never looks at the assembled matrix.

viol = check(data, unpack(inst, res.x))
print("worst violation:", max(viol.values()), "in", max(viol, key=viol.get))

#####################################################################
# Point forecast plan
# -------------------
# The same model with one scenario built from the raw forecasts and the
# estimated residual lives.

pf = replace(params, N_S=1)
ctx_pf = RollContext(dataset, day, fleet, pf, 0, cache, {"roll": 0})
inst_pf = build(roll_data(make_inputs("pf-host", ctx_pf), fleet, pf))
res_pf = solve(inst_pf, gap=pf.gap)
m_pf = inst_pf.values(res_pf.x, "m")
print("PF-HOST starts:", {int(i) + 1: int(t) + 1 for t, i in zip(*np.nonzero(m_pf > 0.5))} or "none")

lp_text = to_lp(inst_pf)
print(f"\nLP export: {len(lp_text.splitlines())} lines, first: {lp_text.splitlines()[0]!r}")
