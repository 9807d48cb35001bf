from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stochos.data import OperationalParams
from stochos.milp import RollData, build, compute_penalties
from stochos.scenario import TrajectorySet, derive
from stochos.synthetic import generate

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_roll(seed: int, n_i: int = 2, n_d: int = 3, n_s: int = 3, **param_changes) -> RollData:
    """Random tiny roll with mixed failed/operational/idle turbines."""
    rng = np.random.default_rng(seed)
    p = OperationalParams(N_D=n_d, N_S=n_s, **param_changes)
    traj = TrajectorySet(
        wind_sth=rng.uniform(0, 20, (24, n_s)), wave_sth=rng.uniform(0, 2.5, (24, n_s)),
        price_sth=rng.uniform(-5, 80, (24, n_s)),
        wind_lth=rng.uniform(0, 18, (n_d, n_s)), wave_lth=rng.uniform(0, 2.2, (n_d, n_s)),
        price_lth=rng.uniform(0, 80, (n_d, n_s)), rl=rng.uniform(0, 5, (n_i, n_s)).round(1),
    )
    tau = rng.integers(2, 12, n_i)
    der = derive(traj, tau, p)
    zeta = (rng.random(n_i) < 0.7).astype(float)
    theta = np.ones(n_i)
    rho = np.zeros(n_i)
    if seed % 3 == 0:
        theta[0], zeta[0] = 0, 1
    elif seed % 5 == 0:
        rho[0] = 1  # resumed task
    return RollData(traj, der, zeta, rho, theta, tau, p, compute_penalties(traj, der, p))


def constant_roll(n_i=1, n_d=2, n_s=1, tau=(1,), wind=8.0, wave=0.5, price=40.0, rl=100.0,
                  zeta=None, theta=None, rho=None, **param_changes) -> RollData:
    p = OperationalParams(N_D=n_d, N_S=n_s, **param_changes)
    traj = TrajectorySet(
        wind_sth=np.full((24, n_s), wind), wave_sth=np.full((24, n_s), wave), price_sth=np.full((24, n_s), price),
        wind_lth=np.full((n_d, n_s), wind), wave_lth=np.full((n_d, n_s), wave),
        price_lth=np.full((n_d, n_s), price), rl=np.full((n_i, n_s), rl),
    )
    tau = np.asarray(tau, int)
    der = derive(traj, tau, p)
    zeta = np.ones(n_i) if zeta is None else np.asarray(zeta, float)
    theta = np.ones(n_i) if theta is None else np.asarray(theta, float)
    rho = np.zeros(n_i) if rho is None else np.asarray(rho, float)
    return RollData(traj, der, zeta, rho, theta, tau, p, compute_penalties(traj, der, p))


def random_instance(seed: int, **kw):
    return build(random_roll(seed, **kw))


@pytest.fixture(scope="session")
def small_dataset():
    return generate(n_days=60, seed=5)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}
ACCEPTANCE_NOTES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[criterion] = (bool(ok), detail)
        print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    for line in ACCEPTANCE_NOTES:
        terminalreporter.write_line(line)
