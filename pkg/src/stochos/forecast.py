"""Probabilistic forecasts: GP residual models and Weibull residual life.

Each uncertain channel is modelled as ``z(t) = zhat(t) + omega(t) + eps(t)``
where ``zhat`` is the raw point forecast, ``omega`` a zero-mean Gaussian
process with a squared-exponential kernel and ``eps`` white noise.  Only the
residuals ``z - zhat`` enter the likelihood.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lapack, solve_triangular
from scipy.optimize import minimize
from scipy.special import gamma

JITTER = 1e-8
MIN_RESIDUALS = 24
ALPHA_FLOOR = 1e-8
N_STARTS = 5

STH_WINDOW_HOURS = 30 * 24
LTH_WINDOW_DAYS = 90


class ForecastError(RuntimeError):
    pass


def se_kernel(t1, t2, alpha: float, ell: float) -> np.ndarray:
    d = np.subtract.outer(np.asarray(t1, float), np.asarray(t2, float))
    return alpha * np.exp(-0.5 * (d / ell) ** 2)


@dataclass(frozen=True)
class GpModel:
    """Fitted residual GP for one channel at one resolution.

    ``times`` are the positions of the usable history points, in units of the
    resolution (hours or days), with the forecast origin ``t_c`` equal to
    ``origin``; lead ``h`` is predicted at ``origin + h``.
    """

    channel: str
    resolution: str  # "hourly" or "daily"
    times: np.ndarray
    history_z: np.ndarray
    history_zhat: np.ndarray
    alpha: float
    ell: float
    delta: float
    origin: float
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)
    _weights: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def residuals(self) -> np.ndarray:
        return self.history_z - self.history_zhat

    def covariance(self) -> np.ndarray:
        n = len(self.times)
        c = se_kernel(self.times, self.times, self.alpha, self.ell)
        c[np.diag_indices(n)] += self.delta + JITTER * self.alpha
        return c


def _factor(model: GpModel) -> GpModel:
    if len(model.times) == 0:
        return model
    try:
        L = np.linalg.cholesky(model.covariance())
    except np.linalg.LinAlgError:
        raise ForecastError(f"{model.channel}: covariance not positive definite after jitter") from None
    w = solve_triangular(L, model.residuals, lower=True)
    object.__setattr__(model, "_chol", L)
    object.__setattr__(model, "_weights", w)
    return model


def _neg_log_lik(theta, t, r, d2):
    alpha, ell, delta = np.exp(theta)
    n = len(r)
    k = alpha * np.exp(-0.5 * d2 / ell**2)
    c = k.copy()
    c[np.diag_indices(n)] += delta + JITTER * alpha
    try:
        cf = cho_factor(c, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros(3)
    a = cho_solve(cf, r, check_finite=False)
    logdet = 2.0 * np.log(np.diag(cf[0])).sum()
    nll = 0.5 * r @ a + 0.5 * logdet + 0.5 * n * math.log(2 * math.pi)
    cinv, info = lapack.dpotri(cf[0], lower=1)
    cinv = np.tril(cinv) + np.tril(cinv, -1).T
    inner = cinv - np.outer(a, a)
    g_alpha = 0.5 * np.sum(inner * k)
    g_ell = 0.5 * np.sum(inner * (k * d2 / ell**2))
    g_delta = 0.5 * delta * np.trace(inner)
    return nll, np.array([g_alpha, g_ell, g_delta])


def fit_gp(
    times,
    measured,
    forecast,
    origin: float,
    channel: str = "",
    resolution: str = "hourly",
    n_starts: int = N_STARTS,
) -> GpModel:
    """Fit kernel hyperparameters by maximising the residual log likelihood.

    Points with a missing measurement or forecast are excluded.  Starts are
    log-spaced in the length-scale; the best local optimum is kept.
    """
    times = np.asarray(times, float)
    z = np.asarray(measured, float)
    zhat = np.asarray(forecast, float)
    if not (len(times) == len(z) == len(zhat)):
        raise ForecastError("history arrays must have equal length")
    ok = np.isfinite(z) & np.isfinite(zhat)
    times, z, zhat = times[ok], z[ok], zhat[ok]
    n = len(times)
    if n < MIN_RESIDUALS:
        raise ForecastError(f"{channel}: need >= {MIN_RESIDUALS} residuals, got {n}")
    r = z - zhat
    if np.ptp(r) == 0.0:
        # degenerate history: all variance goes to the noise term
        delta = max(float(np.mean(r**2)), ALPHA_FLOOR)
        model = GpModel(channel, resolution, times, z, zhat, ALPHA_FLOOR, 1.0, delta, origin)
        return _factor(model)

    scale = float(np.std(r)) or 1.0
    rs = r / scale
    var = float(np.mean(rs**2))
    d2 = np.subtract.outer(times, times) ** 2
    span = max(float(times[-1] - times[0]), 2.0)
    bounds = [
        (math.log(1e-6), math.log(1e2 * var)),
        (math.log(0.25), math.log(span)),
        (math.log(1e-6), math.log(1e2 * var)),
    ]
    best = None
    for ell0 in np.logspace(0, math.log10(span / 4), n_starts):
        x0 = np.log([0.7 * var, ell0, 0.3 * var])
        res = minimize(_neg_log_lik, x0, args=(times, rs, d2), jac=True, method="L-BFGS-B", bounds=bounds)
        if best is None or res.fun < best.fun:
            best = res
    alpha, ell, delta = np.exp(best.x)
    # Occam check: a correlated component that does not beat pure noise by the
    # BIC penalty for its two extra parameters is dropped (no memory)
    noise_nll = 0.5 * n * (math.log(2 * math.pi * var) + 1.0)
    if noise_nll - best.fun < math.log(n):
        alpha, ell, delta = ALPHA_FLOOR / scale**2, math.exp(bounds[1][0]), var
    model = GpModel(
        channel, resolution, times, z, zhat,
        alpha=float(max(alpha * scale**2, ALPHA_FLOOR)),
        ell=float(ell),
        delta=float(delta * scale**2),
        origin=float(origin),
    )
    return _factor(model)


def gp_with_params(times, measured, forecast, origin, alpha, ell, delta, channel="", resolution="hourly") -> GpModel:
    """Build a model with fixed hyperparameters (no likelihood fit)."""
    times = np.asarray(times, float)
    z = np.asarray(measured, float)
    zhat = np.asarray(forecast, float)
    ok = np.isfinite(z) & np.isfinite(zhat)
    model = GpModel(channel, resolution, times[ok], z[ok], zhat[ok], float(alpha), float(ell), float(delta), float(origin))
    return _factor(model)


@dataclass(frozen=True)
class PredictiveMoments:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0, None))


def predict(model: GpModel, raw_forecasts, first_lead: int = 1) -> PredictiveMoments:
    """Predictive mean and covariance at leads ``first_lead ...``.

    ``raw_forecasts[k]`` is the point forecast at lead ``first_lead + k``.
    """
    zhat = np.asarray(raw_forecasts, float)
    if zhat.ndim != 1 or len(zhat) == 0:
        raise ForecastError("need at least one lead time")
    if not np.all(np.isfinite(zhat)):
        raise ForecastError(f"{model.channel}: raw forecasts unavailable for the requested horizon")
    leads = model.origin + first_lead + np.arange(len(zhat))
    if len(model.times) == 0:
        # nothing to condition on: independent leads at the full marginal variance
        return PredictiveMoments(zhat.copy(), (model.alpha + model.delta) * np.eye(len(zhat)))
    prior = se_kernel(leads, leads, model.alpha, model.ell)
    k = se_kernel(model.times, leads, model.alpha, model.ell)
    v = solve_triangular(model._chol, k, lower=True)
    mean = zhat + v.T @ model._weights
    cov = prior - v.T @ v
    cov = 0.5 * (cov + cov.T)
    return PredictiveMoments(mean, cov)


def sample_gaussian(moments: PredictiveMoments, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` joint trajectories, returned with shape ``(len(mean), n)``."""
    mean, cov = moments.mean, moments.cov
    scale = float(np.max(np.diag(cov))) if cov.size else 0.0
    z = rng.standard_normal((len(mean), n))
    if scale <= 0.0:
        return np.repeat(mean[:, None], n, axis=1)
    eye = np.eye(len(mean))
    for jitter in (1e-10, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4):
        try:
            L = np.linalg.cholesky(cov + jitter * scale * eye)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise ForecastError("predictive covariance is not positive semi-definite")
    return mean[:, None] + L @ z


@dataclass(frozen=True)
class RlModel:
    """Weibull residual-life model: scale ``lambda_hat``, shape ``xi``."""

    lambda_hat: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        lh = np.asarray(self.lambda_hat, float)
        xi = np.asarray(self.xi, float)
        if lh.shape != xi.shape or np.any(lh < 0) or np.any(xi <= 0):
            raise ValueError("RL model needs matching non-negative scales and positive shapes")
        object.__setattr__(self, "lambda_hat", lh)
        object.__setattr__(self, "xi", xi)

    def mean(self) -> np.ndarray:
        return self.lambda_hat * gamma(1.0 + 1.0 / self.xi)

    def sample(self, n: int, rng: np.random.Generator, decimals: int | None = 1) -> np.ndarray:
        draws = self.lambda_hat[:, None] * rng.weibull(self.xi[:, None], size=(len(self.xi), n))
        return np.round(draws, decimals) if decimals is not None else draws


def rl_predictive_mean(model: RlModel, turbine: int) -> float:
    return float(model.lambda_hat[turbine] * gamma(1.0 + 1.0 / model.xi[turbine]))


@dataclass(frozen=True)
class ChannelForecast:
    """Predictive moments for one channel over the STH (hourly) and LTH (daily)."""

    sth: PredictiveMoments
    lth: PredictiveMoments
    sth_model: GpModel
    lth_model: GpModel


def fit_channel(dataset, channel: str, day: int, n_days_ahead: int,
                sth_window: int = STH_WINDOW_HOURS, lth_window: int = LTH_WINDOW_DAYS) -> ChannelForecast:
    """Train both resolutions for ``channel`` at the start of ``day`` and predict.

    The hourly model uses the trailing ``sth_window`` hours and predicts the
    24 hours of ``day``; the daily model uses trailing daily means and
    predicts days ``day+1 .. day+n_days_ahead``.
    """
    t0 = 24 * day
    lo = max(0, t0 - sth_window)
    hours = np.arange(lo, t0) - t0
    sth_model = fit_gp(hours, dataset.measured[channel][lo:t0], dataset.forecast[channel][lo:t0],
                       origin=-1, channel=channel, resolution="hourly")
    sth = predict(sth_model, dataset.forecast[channel][t0:t0 + 24])

    dm = dataset.daily("measured", channel)
    df = dataset.daily("forecast", channel)
    dlo = max(0, day - lth_window)
    days = np.arange(dlo, day) - day
    lth_model = fit_gp(days, dm[dlo:day], df[dlo:day], origin=-1, channel=channel, resolution="daily")
    raw = df[day + 1: day + 1 + n_days_ahead]
    if len(raw) < n_days_ahead:
        raise ForecastError(f"{channel}: raw forecasts end before day {day + n_days_ahead}")
    lth = predict(lth_model, raw, first_lead=2)
    return ChannelForecast(sth, lth, sth_model, lth_model)
