"""Scenario trajectories and the per-scenario parameters derived from them.

Index conventions used throughout the package: STH hour ``t`` runs 1..24
(array position ``t - 1``), LTH day ``d`` runs 1..N_D (position ``d - 1``)
and starts the day after the STH.  Scenario ``s`` is always the last axis.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forecast import PredictiveMoments, RlModel, sample_gaussian

NONNEGATIVE = ("wind", "wave")
FRACTION_FLOOR = 0.1
# accessible-day surrogate: fraction ~0.5 when the daily mean sits on a
# threshold, exactly 1 once both margins exceed FULL_ACCESS_MARGIN
FULL_ACCESS_MARGIN = 0.2
LOGISTIC_SCALE = 0.05


@dataclass(frozen=True)
class TrajectorySet:
    wind_sth: np.ndarray  # (24, S)
    wave_sth: np.ndarray
    price_sth: np.ndarray
    wind_lth: np.ndarray  # (N_D, S)
    wave_lth: np.ndarray
    price_lth: np.ndarray
    rl: np.ndarray  # (N_I, S) days
    # optional hourly access over the LTH, (24 * N_D, S); only perfect-knowledge inputs have it
    lth_hourly_access: np.ndarray | None = None

    def __post_init__(self):
        s = self.wind_sth.shape[1]
        for name in ("wind_sth", "wave_sth", "price_sth", "wind_lth", "wave_lth", "price_lth", "rl"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != s:
                raise ValueError(f"{name}: expected 2-D array with {s} scenarios, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: contains non-finite values")
        if self.wind_sth.shape[0] != 24:
            raise ValueError("STH trajectories must have 24 hours")
        if np.any(self.wind_sth < 0) or np.any(self.wave_sth < 0) or np.any(self.wind_lth < 0) \
                or np.any(self.wave_lth < 0) or np.any(self.rl < 0):
            raise ValueError("wind, wave and residual life must be non-negative")

    @property
    def n_scenarios(self) -> int:
        return self.wind_sth.shape[1]

    @property
    def n_days(self) -> int:
        return self.wind_lth.shape[0]

    @property
    def n_turbines(self) -> int:
        return self.rl.shape[0]


def sample_trajectories(moments: dict[str, tuple[PredictiveMoments, PredictiveMoments]],
                        rl_model: RlModel, n_scenarios: int, seed) -> TrajectorySet:
    """Draw joint trajectories for each channel and i.i.d. Weibull RLs.

    ``moments`` maps channel name to its (hourly STH, daily LTH) moments.
    Wind and wave draws are truncated at zero; prices are not.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for channel in ("wind", "wave", "price"):
        sth, lth = moments[channel]
        for label, m in (("sth", sth), ("lth", lth)):
            draws = sample_gaussian(m, n_scenarios, rng)
            if channel in NONNEGATIVE:
                draws = np.maximum(draws, 0.0)
            out[f"{channel}_{label}"] = draws
    out["rl"] = rl_model.sample(n_scenarios, rng)
    return TrajectorySet(**out)


def wind_to_power(wind, cut_in: float = 3.0, rated: float = 11.0, cut_out: float = 25.0):
    """Normalised power output in [0, 1] with a cubic ramp between cut-in and rated speed."""
    v = np.asarray(wind, float)
    ramp = (v**3 - cut_in**3) / (rated**3 - cut_in**3)
    f = np.where(v < cut_in, 0.0, np.where(v < rated, ramp, 1.0))
    f = np.where(v > cut_out, 0.0, f)
    return f if f.ndim else float(f)


def access_state(wind, wave, nu_max: float = 15.0, eta_max: float = 1.8):
    """1 where both wind and wave are at or below their safety thresholds."""
    x = (np.asarray(wind) <= nu_max) & (np.asarray(wave) <= eta_max)
    return x.astype(np.int8) if x.ndim else int(x)


def mission_times(access, tau: int, cap: float) -> np.ndarray:
    """Mission time for every start position of a bit-string.

    Entry ``k`` is the smallest ``a`` with ``tau`` accessible hours among
    positions ``k .. k+a-1``, or ``cap`` when that never happens.
    """
    x = np.asarray(access, dtype=np.int64)
    cs = np.concatenate(([0], np.cumsum(x)))
    target = cs[:-1] + tau
    end = np.searchsorted(cs, target, side="left")
    a = (end - np.arange(len(x))).astype(float)
    a[end > len(x)] = cap
    return np.minimum(a, cap)


def mission_time_sth(t: int, tau: int, access, cap: float) -> float:
    """Mission time of a ``tau``-hour task started at STH hour ``t`` (1-based)."""
    if not 1 <= t <= 24:
        raise ValueError("t must lie in 1..24")
    return float(mission_times(np.asarray(access)[t - 1:], tau, cap)[0])


def accessible_fraction(wind, wave, nu_max: float, eta_max: float):
    """Estimated accessible share of a day from its daily-mean conditions."""
    def margin_term(m):
        full = 1.0 / (1.0 + math.exp(-FULL_ACCESS_MARGIN / LOGISTIC_SCALE))
        return np.minimum(1.0, 1.0 / (1.0 + np.exp(-m / LOGISTIC_SCALE)) / full)

    mw = (nu_max - np.asarray(wind, float)) / nu_max
    mh = (eta_max - np.asarray(wave, float)) / eta_max
    frac = margin_term(mw) * margin_term(mh)
    return np.clip(frac, FRACTION_FLOOR, 1.0)


def mission_time_lth(tau: float, fraction) -> np.ndarray:
    """Hours needed on an LTH day: ``tau`` over the accessible fraction, rounded up."""
    frac = np.clip(np.asarray(fraction, float), FRACTION_FLOOR, 1.0)
    return np.ceil(tau / frac - 1e-9)


def lth_status(rl, n_days: int) -> np.ndarray:
    """Operational status over LTH days: 1 while ``d < rl``, 0 from failure on.

    ``rl`` has shape ``(N_I, S)``; the result has shape ``(N_D, N_I, S)``.
    """
    rl = np.asarray(rl, float)
    d = np.arange(1, n_days + 1).reshape((-1,) + (1,) * rl.ndim)
    return (d < rl).astype(np.int8)


@dataclass(frozen=True)
class DerivedSet:
    f_sth: np.ndarray  # (24, S)
    f_lth: np.ndarray  # (N_D, S)
    x_sth: np.ndarray  # (24, S)
    x_lth: np.ndarray  # (N_D, S) daily access state
    a_sth: np.ndarray  # (24, N_I, S)
    a_lth: np.ndarray  # (N_D, N_I, S)
    zeta_lth: np.ndarray  # (N_D, N_I, S)
    curtail: np.ndarray  # (24, S)


def shift_mask(n_hours: int, t_R: int, t_D: int) -> np.ndarray:
    """1 for hours inside the crew shift ``t_R <= hour-of-day < t_D`` (hours 1-based)."""
    hod = np.arange(n_hours) % 24 + 1
    return ((hod >= t_R) & (hod < t_D)).astype(np.int8)


def extended_access(traj: TrajectorySet, x_sth: np.ndarray, x_lth: np.ndarray) -> np.ndarray:
    """Hourly access over STH + LTH, shape ``(24 + 24 * N_D, S)``."""
    tail = traj.lth_hourly_access if traj.lth_hourly_access is not None else np.repeat(x_lth, 24, axis=0)
    return np.concatenate([x_sth, tail], axis=0)


def workable_hours(access: np.ndarray, t_R: int, t_D: int) -> np.ndarray:
    """Hours in which work progresses: accessible and inside the crew shift."""
    access = np.asarray(access)
    mask = shift_mask(access.shape[0], t_R, t_D)
    return access * (mask[:, None] if access.ndim == 2 else mask)


def derive(traj: TrajectorySet, tau, params) -> DerivedSet:
    """Power levels, access states, mission times and LTH status per scenario.

    ``tau`` gives the remaining repair hours of each turbine.  STH mission
    times count only workable hours (accessible and within the crew shift).
    """
    tau = np.asarray(tau, dtype=int)
    n_s, n_d, n_i = traj.n_scenarios, traj.n_days, traj.n_turbines
    if len(tau) != n_i:
        raise ValueError("tau must have one entry per turbine")
    curve = dict(cut_in=params.cut_in, rated=params.rated_speed, cut_out=params.cut_out)
    f_sth = wind_to_power(traj.wind_sth, **curve)
    f_lth = wind_to_power(traj.wind_lth, **curve)
    x_sth = access_state(traj.wind_sth, traj.wave_sth, params.nu_max, params.eta_max)
    x_lth = access_state(traj.wind_lth, traj.wave_lth, params.nu_max, params.eta_max)
    cap = params.big_m
    access = workable_hours(extended_access(traj, x_sth, x_lth), params.t_R, params.t_D)

    a_sth = np.zeros((24, n_i, n_s))
    a_lth = np.zeros((n_d, n_i, n_s))
    frac = accessible_fraction(traj.wind_lth, traj.wave_lth, params.nu_max, params.eta_max)
    for k in np.unique(tau):
        idx = np.flatnonzero(tau == k)
        for s in range(n_s):
            a_sth[:, idx, s] = mission_times(access[:, s], k, cap)[:24, None]
            if traj.lth_hourly_access is not None:
                starts = 24 + 24 * np.arange(n_d) + params.t_R - 1
                a_lth[:, idx, s] = mission_times(access[:, s], k, cap)[starts][:, None]
        if traj.lth_hourly_access is None:
            a_lth[:, idx, :] = mission_time_lth(k, frac)[:, None, :]
    zeta = lth_status(traj.rl, n_d)
    curtail = np.full((24, n_s), float(params.curtailment))
    return DerivedSet(f_sth, f_lth, x_sth, x_lth, a_sth, a_lth, zeta, curtail)


def dump_scenarios(traj: TrajectorySet, path) -> None:
    """Write trajectories in long format: channel, resolution, index, scenario, value."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "resolution", "index", "scenario", "value"])
        for channel in ("wind", "wave", "price"):
            for res in ("sth", "lth"):
                arr = getattr(traj, f"{channel}_{res}")
                for k in range(arr.shape[0]):
                    for s in range(arr.shape[1]):
                        w.writerow([channel, res, k + 1, s + 1, repr(float(arr[k, s]))])
        for i in range(traj.rl.shape[0]):
            for s in range(traj.rl.shape[1]):
                w.writerow(["rl", "turbine", i + 1, s + 1, repr(float(traj.rl[i, s]))])


def dump_moments(moments: dict[str, tuple[PredictiveMoments, PredictiveMoments]], path) -> None:
    """Write predictive means and standard deviations for fan-chart plotting."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "resolution", "lead", "mean", "std"])
        for channel in ("wind", "wave", "price"):
            for res, m in zip(("sth", "lth"), moments[channel]):
                for k, (mu, sd) in enumerate(zip(m.mean, m.std)):
                    w.writerow([channel, res, k + 1, repr(float(mu)), repr(float(sd))])
