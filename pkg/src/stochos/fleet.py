"""Fleet state carried between rolls and the day-ahead schedule type."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

NO_START = 0  # start_hour value for "not scheduled in the STH"


@dataclass(frozen=True)
class FleetState:
    """Per-turbine status at the start of a roll.

    ``lambda_true`` and ``lambda_hat`` are remaining days; a turbine whose
    task has completed is renewed and carries ``inf`` for both.
    """

    theta: np.ndarray  # task pending
    rho: np.ndarray  # task started and unfinished
    zeta: np.ndarray  # operational
    tau_remaining: np.ndarray
    tau: np.ndarray
    lambda_true: np.ndarray
    lambda_hat: np.ndarray
    xi: np.ndarray

    @classmethod
    def initial(cls, fleet) -> "FleetState":
        n = fleet.n_turbines
        lt = np.asarray(fleet.lambda_true, float)
        return cls(
            theta=np.ones(n, dtype=np.int8),
            rho=np.zeros(n, dtype=np.int8),
            zeta=(lt > 0).astype(np.int8),
            tau_remaining=np.asarray(fleet.tau, dtype=int).copy(),
            tau=np.asarray(fleet.tau, dtype=int).copy(),
            lambda_true=lt.copy(),
            lambda_hat=np.asarray(fleet.lambda_hat, float).copy(),
            xi=np.asarray(fleet.xi, float).copy(),
        )

    @property
    def n_turbines(self) -> int:
        return len(self.theta)

    @property
    def pending(self) -> np.ndarray:
        return np.flatnonzero(self.theta)

    def check(self) -> None:
        if np.any(self.rho > self.theta):
            raise AssertionError("in-progress task without a pending flag")
        if np.any(self.tau_remaining > self.tau) or np.any(self.tau_remaining < 0):
            raise AssertionError("remaining repair time out of range")
        live = np.isfinite(self.lambda_true)
        expected = (self.lambda_true[live] > 0).astype(np.int8)
        if np.any(self.zeta[live] != expected):
            raise AssertionError("operational status disagrees with residual life")

    def evolve(self, **changes) -> "FleetState":
        return replace(self, **{k: np.asarray(v).copy() for k, v in changes.items()})


@dataclass(frozen=True)
class ScheduleDecision:
    """Day-ahead schedule; ``start_hour[i]`` is 1..24 or 0 when not started."""

    start_hour: np.ndarray
    r: int
    mL: np.ndarray | None = None  # (N_D, N_I, S) tentative LTH plan
    rL: np.ndarray | None = None
    objective: float = math.nan
    gap: float = math.nan
    wall_time: float = 0.0
    status: str = "rule"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> np.ndarray:
        out = np.zeros((24, len(self.start_hour)), dtype=np.int8)
        for i, t in enumerate(self.start_hour):
            if t != NO_START:
                out[t - 1, i] = 1
        return out

    @classmethod
    def empty(cls, n_turbines: int) -> "ScheduleDecision":
        return cls(np.zeros(n_turbines, dtype=int), 0)
