from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochos.data import OperationalParams
from stochos.forecast import PredictiveMoments, RlModel
from stochos.scenario import (
    TrajectorySet, access_state, accessible_fraction, derive, lth_status, mission_time_lth, mission_time_sth,
    mission_times, sample_trajectories, shift_mask, wind_to_power, workable_hours,
)


def brute_mission(bits, t, tau, cap):
    """Walk the bit-string from 1-based hour t until tau accessible hours accumulate."""
    done = 0
    for k in range(t - 1, len(bits)):
        done += bits[k]
        if done == tau:
            return float(k - (t - 1) + 1)
    return float(cap)


def test_power_curve_points():
    assert wind_to_power(0.0) == 0.0
    assert wind_to_power(11.0) == 1.0
    assert wind_to_power(26.0) == 0.0
    assert wind_to_power(2.99) == 0.0
    assert wind_to_power(25.0) == 1.0


@given(st.lists(st.floats(0, 40), min_size=2, max_size=50))
def test_power_curve_shape(speeds):
    v = np.sort(np.asarray(speeds))
    f = wind_to_power(v)
    assert np.all((f >= 0) & (f <= 1))
    ramp = v <= 11
    assert np.all(np.diff(f[ramp]) >= -1e-12)
    assert np.all(f[(v >= 11) & (v <= 25)] == 1.0)
    assert np.all(f[(v < 3) | (v > 25)] == 0.0)


def test_access_examples():
    assert access_state(0.0, 0.0) == 1
    assert access_state(15.01, 0.5, nu_max=15) == 0
    assert access_state(10.0, 1.8, eta_max=1.8) == 1
    assert access_state(15.0, 1.81) == 0


@given(st.floats(0, 30), st.floats(0, 4))
def test_access_matches_independent_rule(wind, wave):
    assert access_state(wind, wave) == int(not (wind > 15 or wave > 1.8))


def test_mission_time_examples():
    assert mission_time_sth(1, 4, np.ones(48), 999) == 4
    bits = np.array([1, 1, 0, 0, 1, 1] + [1] * 42)
    assert mission_time_sth(1, 4, bits, 999) == 6
    assert mission_time_sth(3, 4, np.zeros(48), 999) == 999


@given(st.lists(st.integers(0, 1), min_size=1, max_size=80), st.integers(1, 12), st.data())
def test_mission_times_match_bruteforce_and_monotone(bits, tau, data):
    bits = np.array(bits)
    cap = 500.0
    got = mission_times(bits, tau, cap)
    for t in range(1, len(bits) + 1):
        assert got[t - 1] == brute_mission(bits, t, tau, cap)
    k = data.draw(st.integers(0, len(bits) - 1))
    more = bits.copy()
    more[k] = 1
    assert np.all(mission_times(more, tau, cap) <= got)


def test_mission_time_lth_examples():
    assert mission_time_lth(5, 1.0) == 5
    assert mission_time_lth(5, 0.5) == 10
    assert mission_time_lth(4, 0.1) == 40
    assert mission_time_lth(4, 0.01) == 40  # clamped


def test_accessible_fraction_bounds_and_monotone():
    wind = np.linspace(0, 25, 60)
    frac = accessible_fraction(wind, np.full_like(wind, 0.5), 15, 1.8)
    assert np.all((frac >= 0.1) & (frac <= 1.0))
    assert np.all(np.diff(frac) <= 1e-12)
    assert accessible_fraction(2.0, 0.2, 15, 1.8) == 1.0


def test_lth_status_examples():
    assert lth_status(np.array([3.2]), 6)[:, 0].tolist() == [1, 1, 1, 0, 0, 0]
    assert lth_status(np.array([0.0]), 4)[:, 0].tolist() == [0, 0, 0, 0]
    assert lth_status(np.array([9.0]), 4)[:, 0].tolist() == [1, 1, 1, 1]


def moments(mean, cov):
    return PredictiveMoments(np.asarray(mean, float), np.asarray(cov, float))


def simple_moments(n_d=3, cov_scale=1.0):
    out = {}
    for ch, level in (("wind", 8.0), ("wave", 1.0), ("price", 30.0)):
        out[ch] = (moments(np.full(24, level), cov_scale * np.eye(24)),
                   moments(np.full(n_d, level), cov_scale * np.eye(n_d)))
    return out


def test_zero_covariance_scenarios_equal_mean():
    traj = sample_trajectories(simple_moments(cov_scale=0.0), RlModel(np.array([5.0]), np.array([2.0])), 6, 1)
    assert np.all(traj.wind_sth == 8.0) and np.all(traj.price_lth == 30.0)


def test_fixed_seed_bitwise_identical():
    rl = RlModel(np.array([5.0, 9.0]), np.array([2.0, 3.0]))
    a = sample_trajectories(simple_moments(), rl, 10, 42)
    b = sample_trajectories(simple_moments(), rl, 10, 42)
    for name in ("wind_sth", "wave_sth", "price_sth", "wind_lth", "wave_lth", "price_lth", "rl"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_two_step_lag_one_covariance():
    cov = np.array([[2.0, 1.2], [1.2, 1.5]])
    m = {ch: (moments(np.full(24, 50.0), np.eye(24)), moments([50.0, 50.0], cov)) for ch in ("wind", "wave", "price")}
    traj = sample_trajectories(m, RlModel(np.array([5.0]), np.array([2.0])), 10_000, 7)
    emp = np.cov(traj.price_lth)
    assert abs(emp[0, 1] - 1.2) <= 0.05 * 1.2


def test_truncation_only_for_physical_channels():
    m = {ch: (moments(np.zeros(24), 4 * np.eye(24)), moments(np.zeros(2), 4 * np.eye(2)))
         for ch in ("wind", "wave", "price")}
    traj = sample_trajectories(m, RlModel(np.array([5.0]), np.array([2.0])), 200, 0)
    assert traj.wind_sth.min() == 0.0 and traj.wave_lth.min() == 0.0
    assert traj.price_sth.min() < 0.0


def test_rl_samples_rounded():
    traj = sample_trajectories(simple_moments(), RlModel(np.array([5.0]), np.array([2.0])), 50, 0)
    assert np.allclose(traj.rl, np.round(traj.rl, 1))


def test_trajectory_validation():
    with pytest.raises(ValueError):
        TrajectorySet(*(np.full((24, 2), -1.0),) * 3, *(np.ones((2, 2)),) * 3, np.ones((1, 2)))


def test_shift_mask():
    mask = shift_mask(48, 6, 21)
    hours = np.flatnonzero(mask[:24]) + 1
    assert hours.min() == 6 and hours.max() == 20
    assert np.array_equal(mask[:24], mask[24:])
    assert workable_hours(np.ones((24, 2)), 6, 21).sum() == 30


def constant_traj(n_d, n_s, wind=8.0, wave=0.5, rl=50.0, n_i=2):
    return TrajectorySet(
        np.full((24, n_s), wind), np.full((24, n_s), wave), np.full((24, n_s), 30.0),
        np.full((n_d, n_s), wind), np.full((n_d, n_s), wave), np.full((n_d, n_s), 30.0), np.full((n_i, n_s), rl),
    )


def test_derive_mission_times_calm_weather():
    p = OperationalParams(N_D=3, N_S=2)
    der = derive(constant_traj(3, 2), np.array([4, 11]), p)
    # start at 6: shift 6..20 is all workable
    assert der.a_sth[5, 0, 0] == 4 and der.a_sth[5, 1, 0] == 11
    # start at 18 with 11 hours: 3 today, 8 more from 6 the next morning
    assert der.a_sth[17, 1, 0] == 3 + (24 - 20) + 5 + 8
    assert np.all(der.a_lth[:, 0, :] == 4)
    assert np.all(der.x_sth == 1)


@given(st.integers(0, 2**31), st.integers(1, 4))
def test_derived_invariants(seed, n_d):
    rng = np.random.default_rng(seed)
    n_s, n_i = 3, 2
    traj = TrajectorySet(
        rng.uniform(0, 20, (24, n_s)), rng.uniform(0, 2.5, (24, n_s)), rng.uniform(0, 60, (24, n_s)),
        rng.uniform(0, 20, (n_d, n_s)), rng.uniform(0, 2.5, (n_d, n_s)), rng.uniform(0, 60, (n_d, n_s)),
        rng.uniform(0, 6, (n_i, n_s)).round(1),
    )
    tau = rng.integers(1, 12, n_i)
    der = derive(traj, tau, OperationalParams(N_D=n_d, N_S=n_s))
    assert np.all(der.a_sth >= tau[None, :, None])
    assert np.all(der.a_lth >= tau[None, :, None])
    d = np.arange(1, n_d + 1)[:, None, None]
    assert np.array_equal(der.zeta_lth == 0, d >= traj.rl[None])
    assert np.all((der.f_sth >= 0) & (der.f_sth <= 1))
