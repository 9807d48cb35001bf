"""Independent feasibility check of a roll assignment.

Constraints are re-derived from the roll data in their textbook form
(aggregated maintenance windows, fractional availability coefficients,
big-M vessel rows) and evaluated on named variable arrays.  Nothing here
reads the builder's matrix, so a builder bug shows up as a violation.
"""
from __future__ import annotations

import numpy as np

TOL = 1e-6

KINDS = {
    "m": "binary", "r": "binary", "mL": "binary", "rL": "binary", "u": "binary",
    "x": "binary", "y": "binary", "yL": "binary", "w": "binary",
    "q": "integer", "qL": "integer", "b": "integer", "ax": "integer", "aq": "integer", "aqL": "integer",
    "p": "continuous", "pL": "continuous",
}


def unpack(instance, x) -> dict[str, np.ndarray]:
    return {name: np.asarray(instance.values(x, name), float) for name in instance.families}


def _worst(viol: dict, family: str, amount) -> None:
    amount = float(np.max(amount, initial=0.0))
    viol[family] = max(viol.get(family, 0.0), amount)


def check(data, v: dict[str, np.ndarray]) -> dict[str, float]:
    """Largest violation per constraint family (0 means satisfied)."""
    p = data.params
    traj, der = data.traj, data.derived
    n_i, n_d, n_s = data.dims
    zeta, rho = np.asarray(data.zeta, float), np.asarray(data.rho, float)
    pending = np.asarray(data.theta, bool)
    M = p.big_m
    viol: dict[str, float] = {}

    for name, kind in KINDS.items():
        arr = v[name]
        _worst(viol, "bounds", -arr)
        if kind == "binary":
            _worst(viol, "bounds", arr - 1)
        if kind != "continuous":
            _worst(viol, "integrality", np.abs(arr - np.round(arr)))

    m, mL, u, x, y, yL = v["m"], v["mL"], v["u"], v["x"], v["y"], v["yL"]
    hours = np.arange(1, 25)
    days = np.arange(1, n_d + 1)

    for i in range(n_i):
        for s in range(n_s):
            total = m[:, i].sum() + mL[:, i, s].sum()
            _worst(viol, "maintain_once", abs(total - (1.0 if pending[i] else 0.0)))
    if p.t_R > 0:
        _worst(viol, "daylight_start", m - (hours / p.t_R)[:, None])
    _worst(viol, "daylight_end", m - (p.t_D / hours)[:, None])

    for i in range(n_i):
        for s in range(n_s):
            over = 0.0
            for t in hours:
                a = der.a_sth[t - 1, i, s]
                n = int(min(a, 25 - t))
                _worst(viol, "under_maintenance", n * m[t - 1, i] - u[t - 1:t - 1 + n, i, s].sum())
                over += max(0.0, a - 24 + t - 1) * m[t - 1, i]
            _worst(viol, "remaining_time", over - v["b"][i, s])
            _worst(viol, "interruption_flag", v["b"][i, s] - M * v["w"][i, s])
            _worst(viol, "crew_dispatch", u[:, i, s] - hours / p.t_D - x[:, i, s])
    _worst(viol, "crew_cap", x.sum(axis=1) - p.B - v["ax"][None, :])

    for i in range(n_i):
        base = zeta[i] * (1 - rho[i])
        restored = (24 * m[:, i].sum() - hours @ m[:, i]) / (24 - hours + p.g)
        for s in range(n_s):
            _worst(viol, "availability_sth", y[:, i, s] - base - restored)
            base_L = der.zeta_lth[:, i, s] * (1 - rho[i])
            restored_L = (n_d - days @ mL[:, i, s]) / (n_d - days + p.g)
            _worst(viol, "availability_lth", yL[:, i, s] - base_L - restored_L)
    _worst(viol, "maint_unavailable", y + u - 1)

    _worst(viol, "vessel_sth", m.sum() - M * v["r"])
    _worst(viol, "vessel_lth", mL.sum(axis=1) - M * v["rL"])

    bw = p.B * p.W
    _worst(viol, "work_hours_sth", x.sum(axis=(0, 1)) - v["q"] - v["aq"] - bw)
    load = np.einsum("dis,dis->ds", der.a_lth, mL)
    load[0] += v["b"].sum(axis=0)
    _worst(viol, "work_hours_lth", load - v["qL"] - v["aqL"] - bw)
    _worst(viol, "overtime_sth", v["q"] - p.H)
    _worst(viol, "overtime_lth", v["qL"] - p.H)

    _worst(viol, "power_sth", v["p"] - p.R * der.f_sth[:, None, :] * y)
    _worst(viol, "power_lth", v["pL"] - 24 * p.R * der.f_lth[:, None, :] * yL)
    lost = p.R * der.f_lth[:, None, :] * np.minimum(der.a_lth, 24.0) * der.zeta_lth * mL
    _worst(viol, "power_lth_maintenance", v["pL"] + lost - 24 * p.R * der.f_lth[:, None, :])
    cap = n_i * der.f_sth * p.R * der.curtail
    _worst(viol, "curtailment", v["p"].sum(axis=1) - cap)
    return viol


def row_violations(instance, x) -> dict[str, float]:
    """Largest violation of the built rows per family, plus variable bounds."""
    x = np.asarray(x, float)
    ax = instance.A @ x
    excess = np.maximum(instance.row_lb - ax, ax - instance.row_ub)
    out = {}
    for k, fam in enumerate(instance.row_families):
        sel = instance.row_family == k
        out[fam] = float(np.max(excess[sel], initial=0.0)) if sel.any() else 0.0
    out["bounds"] = float(np.max(np.maximum(instance.lb - x, x - instance.ub), initial=0.0))
    return {k: max(val, 0.0) for k, val in out.items()}


def is_feasible(data, v, tol: float = TOL) -> bool:
    return all(val <= tol for val in check(data, v).values())
