"""
Residual GP forecasts and weather scenarios
===========================================

Fit the residual Gaussian process on the bundled sample site, look at how
much it moves the raw day-ahead forecast, then draw joint scenarios and
turn them into access and power.
"""
from __future__ import annotations

import numpy as np

from stochos.benchmarks import ForecastCache
from stochos.cli import SAMPLE_DATA
from stochos.data import load_config, load_dataset
from stochos.forecast import RlModel
from stochos.scenario import access_state, sample_trajectories, wind_to_power

params, fleet = load_config(SAMPLE_DATA / "config.json")
dataset = load_dataset(SAMPLE_DATA)
day = 40

#####################################################################
# Hyperparameters per channel and resolution
# ------------------------------------------
# The hourly model trains on the last 30 days of residuals, the daily
# model on the last 90 daily means (fewer here, the site starts at day 0).

cache = ForecastCache(dataset)
fits = {ch: cache.get(ch, day, params.N_D) for ch in ("wind", "wave", "price")}
for ch, fc in fits.items():
    for label, m in (("hourly", fc.sth_model), ("daily", fc.lth_model)):
        print(f"{ch:5s} {label:6s} alpha={m.alpha:8.4f} ell={m.ell:7.2f} delta={m.delta:8.4f}")

#####################################################################
# Corrected forecast against the raw one
# --------------------------------------
# Persistent forecast errors carry over from the last hours of history,
# so the first leads shift most and the band widens with the lead.

t0 = 24 * day
raw = dataset.forecast["wind"][t0:t0 + 24]
truth = dataset.measured["wind"][t0:t0 + 24]
sth = fits["wind"].sth
print("\nhour  raw   gp    +-2sd  measured")
for h in range(0, 24, 3):
    print(f"{h:4d} {raw[h]:5.1f} {sth.mean[h]:5.1f} {2 * sth.std[h]:6.2f} {truth[h]:8.1f}")
print(f"MAE raw {np.mean(np.abs(raw - truth)):.2f}  gp {np.mean(np.abs(sth.mean - truth)):.2f} m/s")

#####################################################################
# Joint scenarios
# ---------------
# Trajectories keep the lead-to-lead correlation, so a calm spell in one
# scenario tends to last.  Residual lives come from the Weibull model.

moments = {ch: (fc.sth, fc.lth) for ch, fc in fits.items()}
traj = sample_trajectories(moments, RlModel(np.array(fleet.lambda_hat), np.array(fleet.xi)), 50,
                           np.random.SeedSequence(1))
x = access_state(traj.wind_sth, traj.wave_sth, params.nu_max, params.eta_max)
f = wind_to_power(traj.wind_sth, params.cut_in, params.rated_speed, params.cut_out)
shift = slice(params.t_R, params.t_D)
print(f"\nscenarios: {traj.n_scenarios}, in-shift access share {x[shift].mean():.2f}")
print(f"hours with every scenario accessible: {int(x[shift].all(axis=1).sum())} of {params.t_D - params.t_R}")
print(f"mean capacity factor {f.mean():.2f}, per-scenario range {f.mean(axis=0).min():.2f}..{f.mean(axis=0).max():.2f}")
print("sampled RL means (days):", np.round(traj.rl.mean(axis=1), 1), "model:", np.round(RlModel(
    np.array(fleet.lambda_hat), np.array(fleet.xi)).mean(), 1))
