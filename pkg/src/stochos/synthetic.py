"""Synthetic offshore site data.

Weather anomalies and forecast errors are AR(1) processes, so residuals
are persistent and a residual model has something to learn.  Wave height
follows a smoothed response to wind plus swell.  Prices have a daily
shape, a slow anomaly and a modest negative link to wind.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class SiteModel:
    wind_mean: float = 9.5
    wind_sd: float = 4.2
    wind_phi: float = 0.975  # hourly persistence of the weather anomaly
    wave_base: float = 0.5
    wave_gain: float = 0.095  # m per m/s of smoothed wind
    swell_sd: float = 0.3
    price_mean: float = 38.0
    price_daily_amp: float = 10.0
    price_sd: float = 9.0
    wind_err_sd: float = 1.6
    wave_err_sd: float = 0.22
    price_err_sd: float = 6.0
    err_phi: float = 0.97


def _ar1(n, phi, sd, rng):
    """Stationary AR(1) path with marginal standard deviation ``sd``."""
    out = np.empty(n)
    out[0] = rng.normal(0.0, sd)
    innov = rng.normal(0.0, sd * np.sqrt(1 - phi**2), n)
    for k in range(1, n):
        out[k] = phi * out[k - 1] + innov[k]
    return out


def generate(n_days: int = 120, seed: int = 0, start: datetime = datetime(2021, 1, 1),
             site: SiteModel = SiteModel()) -> Dataset:
    rng = np.random.default_rng(seed)
    n = 24 * n_days
    hour = np.arange(n) % 24

    wind = site.wind_mean + _ar1(n, site.wind_phi, site.wind_sd, rng) + 0.8 * np.sin(2 * np.pi * (hour - 15) / 24)
    wind = np.maximum(wind, 0.0)
    smooth = np.convolve(np.r_[np.full(11, wind[0]), wind], np.ones(12) / 12, mode="valid")
    wave = site.wave_base + site.wave_gain * smooth + _ar1(n, 0.99, site.swell_sd, rng)
    wave = np.maximum(wave, 0.05)
    daily_shape = site.price_daily_amp * np.sin(2 * np.pi * (hour - 9) / 24)
    price = site.price_mean + daily_shape + _ar1(n, 0.97, site.price_sd, rng) - 0.8 * (wind - site.wind_mean)

    wind_fc = np.maximum(wind + _ar1(n, site.err_phi, site.wind_err_sd, rng), 0.0)
    wave_fc = np.maximum(wave + _ar1(n, site.err_phi, site.wave_err_sd, rng), 0.0)
    price_fc = price + _ar1(n, site.err_phi, site.price_err_sd, rng)

    measured = {"wind": wind, "wave": wave, "price": price}
    forecast = {"wind": wind_fc, "wave": wave_fc, "price": price_fc}
    flags = {k: np.zeros(n, dtype=bool) for k in measured}
    return Dataset(start, measured, forecast, flags)
