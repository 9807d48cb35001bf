"""Two-stage stochastic MILP for one planning roll.

The instance is a plain sparse matrix description (variables, rows,
objective) so it can be checked independently, exported to LP text format
or handed to any backend.  The in-process backend is HiGHS through
:func:`scipy.optimize.milp`.

Mission times and status parameters are data, so every row is linear in
the decision variables.  Several families are written in a disaggregated
form with the same integer solutions as the textbook rows but a much
tighter LP relaxation: hour-by-hour maintenance windows, per-turbine
vessel rows, and 0/1 availability coefficients (a fractional coefficient
below one can never free a binary availability variable).  The independent
checker in :mod:`stochos.checker` evaluates the original forms.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
INF = np.inf


class BuildError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class VarFamily:
    name: str
    offset: int
    shape: tuple[int, ...]
    kind: str

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1


@dataclass(frozen=True)
class PenaltyCoefficients:
    U: np.ndarray  # per-scenario cost of one interruption event
    Y: np.ndarray  # per-scenario cost of each remaining maintenance hour


@dataclass
class RollData:
    """Everything one roll's model is built from."""

    traj: object  # TrajectorySet
    derived: object  # DerivedSet
    zeta: np.ndarray  # (N_I,) day-ahead operational status
    rho: np.ndarray  # (N_I,) task already in progress
    theta: np.ndarray  # (N_I,) task pending
    tau: np.ndarray  # (N_I,) remaining repair hours
    params: object
    penalties: PenaltyCoefficients

    @property
    def dims(self) -> tuple[int, int, int]:
        return len(self.zeta), self.traj.n_days, self.traj.n_scenarios


@dataclass
class MilpInstance:
    families: dict[str, VarFamily]
    lb: np.ndarray
    ub: np.ndarray
    A: sparse.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    row_family: np.ndarray  # index into row_families
    row_families: list[str]
    c: np.ndarray  # maximise c @ x
    metadata: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.lb)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def integrality(self) -> np.ndarray:
        out = np.zeros(self.n_vars, dtype=np.int8)
        for fam in self.families.values():
            if fam.kind != CONTINUOUS:
                out[fam.offset:fam.offset + fam.size] = 1
        return out

    def columns(self, name: str) -> np.ndarray:
        fam = self.families[name]
        return np.arange(fam.offset, fam.offset + fam.size).reshape(fam.shape)

    def values(self, x, name: str) -> np.ndarray:
        fam = self.families[name]
        return np.asarray(x)[fam.offset:fam.offset + fam.size].reshape(fam.shape)

    def rows(self, family: str) -> np.ndarray:
        return np.flatnonzero(self.row_family == self.row_families.index(family))

    def var_names(self) -> list[str]:
        names = [""] * self.n_vars
        for fam in self.families.values():
            for k, idx in enumerate(np.ndindex(*fam.shape) if fam.shape else [()]):
                label = "_".join(str(i + 1) for i in idx)
                names[fam.offset + k] = f"{fam.name}_{label}" if label else fam.name
        return names

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, float))


@dataclass(frozen=True)
class SolveResult:
    objective: float
    x: np.ndarray | None
    gap: float
    wall_time: float
    status: str  # optimal_within_gap | infeasible | time_limit
    backend: str = "highs"


class _Builder:
    def __init__(self):
        self.families: dict[str, VarFamily] = {}
        self.lb: list[np.ndarray] = []
        self.ub: list[np.ndarray] = []
        self.n = 0
        self.rows, self.cols, self.vals = [], [], []
        self.row_lb, self.row_ub, self.row_fam = [], [], []
        self.fam_names: list[str] = []
        self.n_rows = 0

    def var(self, name, shape, kind, lb=0.0, ub=INF):
        shape = tuple(shape)
        fam = VarFamily(name, self.n, shape, kind)
        self.families[name] = fam
        size = fam.size
        if kind == BINARY:
            ub = np.minimum(ub, 1.0)
        self.lb.append(np.broadcast_to(np.asarray(lb, float), shape).ravel().copy())
        self.ub.append(np.broadcast_to(np.asarray(ub, float), shape).ravel().copy())
        self.n += size
        return np.arange(fam.offset, fam.offset + size).reshape(shape)

    def row(self, family, cols, coefs, lo=-INF, hi=INF):
        if family not in self.fam_names:
            self.fam_names.append(family)
        cols = np.atleast_1d(np.asarray(cols)).ravel()
        coefs = np.broadcast_to(np.asarray(coefs, float), cols.shape).ravel()
        self.rows.append(np.full(len(cols), self.n_rows))
        self.cols.append(cols)
        self.vals.append(coefs)
        self.row_lb.append(lo)
        self.row_ub.append(hi)
        self.row_fam.append(self.fam_names.index(family))
        self.n_rows += 1

    def finish(self, c, metadata) -> MilpInstance:
        A = sparse.csr_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_rows, self.n),
        )
        A.sum_duplicates()
        return MilpInstance(
            families=self.families,
            lb=np.concatenate(self.lb),
            ub=np.concatenate(self.ub),
            A=A,
            row_lb=np.asarray(self.row_lb, float),
            row_ub=np.asarray(self.row_ub, float),
            row_family=np.asarray(self.row_fam),
            row_families=list(self.fam_names),
            c=c,
            metadata=metadata,
        )


def compute_penalties(traj, derived, params) -> PenaltyCoefficients:
    """Interruption penalties per scenario.

    ``U`` prices the idle hours between the end of the STH and the first
    accessible first-light hour in the LTH; ``Y`` prices each remaining hour
    of work (crew time plus production foregone).  Both use day-1 LTH price
    and power, with negative prices treated as zero.
    """
    price = np.maximum(traj.price_lth[0], 0.0)
    revenue_rate = price * params.R * derived.f_lth[0]
    n_d = derived.x_lth.shape[0]
    idle = np.empty(traj.n_scenarios)
    for s in range(traj.n_scenarios):
        open_days = np.flatnonzero(derived.x_lth[:, s])
        idle[s] = 24 * open_days[0] + params.t_R if len(open_days) else 24 * n_d
    return PenaltyCoefficients(U=idle * revenue_rate, Y=params.Psi + revenue_rate)


def build(data: RollData, roll: int = 0) -> MilpInstance:
    """Materialise the roll's MILP.  Objective is profit to maximise."""
    p = data.params
    traj, der = data.traj, data.derived
    n_i, n_d, n_s = data.dims
    T = np.arange(1, 25)
    D = np.arange(1, n_d + 1)
    for name, arr, shape in (
        ("a_sth", der.a_sth, (24, n_i, n_s)), ("a_lth", der.a_lth, (n_d, n_i, n_s)),
        ("zeta_lth", der.zeta_lth, (n_d, n_i, n_s)), ("f_sth", der.f_sth, (24, n_s)),
        ("f_lth", der.f_lth, (n_d, n_s)), ("rl", traj.rl, (n_i, n_s)),
    ):
        if arr.shape != shape:
            raise BuildError(f"{name}: expected shape {shape}, got {arr.shape}")
    for name in ("rho", "theta", "tau"):
        if len(getattr(data, name)) != n_i:
            raise BuildError(f"{name}: expected {n_i} entries")

    pending = np.asarray(data.theta, bool)
    zeta = np.asarray(data.zeta, float)
    rho = np.asarray(data.rho, float)
    M = p.big_m
    w_s = 1.0 / n_s
    bw = p.B * p.W

    b = _Builder()
    open_i = pending[None, :].astype(float)
    m = b.var("m", (24, n_i), BINARY, ub=np.broadcast_to(open_i, (24, n_i)))
    r = b.var("r", (), BINARY)
    mL = b.var("mL", (n_d, n_i, n_s), BINARY, ub=np.broadcast_to(open_i[..., None], (n_d, n_i, n_s)))
    rL = b.var("rL", (n_d, n_s), BINARY)
    u = b.var("u", (24, n_i, n_s), BINARY, ub=np.broadcast_to(open_i[..., None], (24, n_i, n_s)))
    x = b.var("x", (24, n_i, n_s), BINARY, ub=np.broadcast_to(open_i[..., None], (24, n_i, n_s)))
    y = b.var("y", (24, n_i, n_s), BINARY)
    yL = b.var("yL", (n_d, n_i, n_s), BINARY)
    q = b.var("q", (n_s,), INTEGER)
    qL = b.var("qL", (n_d, n_s), INTEGER)
    bb = b.var("b", (n_i, n_s), INTEGER, ub=M)
    w = b.var("w", (n_i, n_s), BINARY)
    ax = b.var("ax", (n_s,), INTEGER, ub=n_i)
    aq = b.var("aq", (n_s,), INTEGER)
    aqL = b.var("aqL", (n_d, n_s), INTEGER)
    pw = b.var("p", (24, n_i, n_s), CONTINUOUS)
    pL = b.var("pL", (n_d, n_i, n_s), CONTINUOUS)

    c = np.zeros(b.n)
    repair = (1 - rho) * (zeta * p.K + (1 - zeta) * p.Phi)
    c[m] = -np.broadcast_to(repair, (24, n_i))
    c[r] = -p.Omega
    c[pw] = w_s * traj.price_sth[:, None, :]
    c[x] = -w_s * p.Psi
    c[q] = -w_s * p.Q
    c[pL] = w_s * traj.price_lth[:, None, :]
    zl = der.zeta_lth
    repair_L = (1 - rho)[None, :, None] * (zl * p.K + (1 - zl) * p.Phi)
    c[mL] = -w_s * (repair_L + p.Psi * der.a_lth)
    c[rL] = -w_s * p.Omega
    c[qL] = -w_s * p.Q
    pen = data.penalties
    c[w] = -w_s * np.broadcast_to(pen.U, (n_i, n_s))
    c[bb] = -w_s * np.broadcast_to(pen.Y, (n_i, n_s))
    c[ax] = -w_s * p.C1
    c[aq] = -w_s * p.C2
    c[aqL] = -w_s * p.C2

    a_sth = der.a_sth
    for i in np.flatnonzero(pending):
        for s in range(n_s):
            # one maintenance start across STH and LTH
            b.row("maintain_once", np.concatenate([m[:, i], mL[:, i, s]]), 1.0, 1.0, 1.0)
        for t in T:
            if p.t_R > 0:
                b.row("daylight_start", m[t - 1, i], 1.0, hi=t / p.t_R)
            b.row("daylight_end", m[t - 1, i], 1.0, hi=p.t_D / t)

    starts = np.array([t for t in T if t >= p.t_R and t <= p.t_D])
    for i in np.flatnonzero(pending):
        for s in range(n_s):
            a = a_sth[starts - 1, i, s]
            n = np.minimum(a, 25 - starts).astype(int)
            over = np.maximum(0.0, starts + a - 25)
            # hour k is under maintenance if a start covering it was chosen
            for k in T:
                cover = starts[(starts <= k) & (k <= starts + n - 1)]
                if len(cover):
                    b.row("under_maintenance", np.r_[u[k - 1, i, s], m[cover - 1, i]],
                          np.r_[1.0, -np.ones(len(cover))], lo=0.0)
            b.row("remaining_time", np.r_[bb[i, s], m[starts - 1, i]], np.r_[1.0, -over], lo=0.0)
            b.row("interruption_flag", [bb[i, s], w[i, s]], [1.0, -M], hi=0.0)
            late = starts[over > 0]
            if len(late):
                b.row("interruption_flag", np.r_[w[i, s], m[late - 1, i]], np.r_[1.0, -np.ones(len(late))], lo=0.0)
            for t in T[T < p.t_D]:
                b.row("crew_dispatch", [x[t - 1, i, s], u[t - 1, i, s]], [1.0, -1.0], lo=0.0)

    for s in range(n_s):
        for t in T:
            b.row("crew_cap", np.r_[x[t - 1, :, s], ax[s]], np.r_[np.ones(n_i), -1.0], hi=p.B)

    for i in range(n_i):
        base = zeta[i] * (1 - rho[i])
        for t in T:
            # a binary y is only freed by a repair that started strictly earlier
            earlier = m[:t - 1, i] if pending[i] else m[:0, i]
            for s in range(n_s):
                b.row("availability_sth", np.r_[y[t - 1, i, s], earlier], np.r_[1.0, -np.ones(len(earlier))], hi=base)
                b.row("maint_unavailable", [y[t - 1, i, s], u[t - 1, i, s]], 1.0, hi=1.0)
                b.row("power_sth", [pw[t - 1, i, s], y[t - 1, i, s]],
                      [1.0, -p.R * der.f_sth[t - 1, s]], hi=0.0)
        for d in D:
            for s in range(n_s):
                base_L = zl[d - 1, i, s] * (1 - rho[i])
                later = mL[d - 1:, i, s] if pending[i] else mL[:0, i, s]
                b.row("availability_lth", np.r_[yL[d - 1, i, s], later], np.r_[1.0, np.ones(len(later))], hi=base_L + 1.0)
                f = der.f_lth[d - 1, s]
                b.row("power_lth", [pL[d - 1, i, s], yL[d - 1, i, s]], [1.0, -24 * p.R * f], hi=0.0)
                if pending[i]:
                    loss = p.R * f * min(der.a_lth[d - 1, i, s], 24.0) * zl[d - 1, i, s]
                    b.row("power_lth_maintenance", [pL[d - 1, i, s], mL[d - 1, i, s]], [1.0, loss], hi=24 * p.R * f)

    for i in np.flatnonzero(pending):
        b.row("vessel_sth", np.r_[r, m[:, i]], np.r_[1.0, -np.ones(24)], lo=0.0)
    for s in range(n_s):
        for d in D:
            for i in np.flatnonzero(pending):
                b.row("vessel_lth", [rL[d - 1, s], mL[d - 1, i, s]], [1.0, -1.0], lo=0.0)
        b.row("work_hours_sth", np.r_[x[:, :, s].ravel(), q[s], aq[s]],
              np.r_[np.ones(24 * n_i), -1.0, -1.0], hi=bw)
        for d in D:
            cols = [mL[d - 1, :, s], [qL[d - 1, s], aqL[d - 1, s]]]
            coefs = [der.a_lth[d - 1, :, s], [-1.0, -1.0]]
            if d == 1:
                cols.append(bb[:, s])
                coefs.append(np.ones(n_i))
            b.row("work_hours_lth", np.concatenate(cols), np.concatenate(coefs), hi=bw)
            b.row("overtime_lth", qL[d - 1, s], 1.0, hi=p.H)
        b.row("overtime_sth", q[s], 1.0, hi=p.H)
        for t in T:
            cap = n_i * der.f_sth[t - 1, s] * p.R * der.curtail[t - 1, s]
            b.row("curtailment", pw[t - 1, :, s], 1.0, hi=cap)

    meta = {"roll": roll, "dims": {"N_I": n_i, "N_D": n_d, "N_S": n_s}, "data": data}
    return b.finish(c, meta)


DISCRETE_DECISIONS = ("m", "r", "mL", "rL")


def _highs(instance, integrality, lb, ub, gap, time_limit):
    options = {"disp": False, "mip_rel_gap": gap, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = max(float(time_limit), 1.0)
    return milp(
        -instance.c,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        constraints=LinearConstraint(instance.A, instance.row_lb, instance.row_ub),
        options=options,
    )


def _solve_highs(instance: MilpInstance, gap: float, time_limit: float | None) -> SolveResult:
    """Two-phase HiGHS solve.

    Phase 1 keeps integrality only on the maintenance and vessel decisions.
    With those fixed, the remaining rows have integer right-hand sides and
    the recourse LP has an integral optimum, so phase 2 (full integrality,
    decisions fixed) recovers an integer assignment of the same value.  The
    reported gap is measured against the phase-1 dual bound, which is valid
    for the full model.
    """
    start = time.perf_counter()
    integ = np.zeros(instance.n_vars, dtype=np.int8)
    for name in DISCRETE_DECISIONS:
        integ[instance.columns(name).ravel()] = 1
    res = _highs(instance, integ, instance.lb, instance.ub, gap, time_limit)
    if res.status == 2:
        return SolveResult(math.nan, None, math.nan, time.perf_counter() - start, "infeasible")
    if res.x is None:
        if res.status == 1:
            return SolveResult(math.nan, None, math.nan, time.perf_counter() - start, "time_limit")
        raise SolverError(f"HiGHS failed: {res.message}")
    bound = -float(getattr(res, "mip_dual_bound", -res.fun))

    fixed = integ.astype(bool)
    lb, ub = instance.lb.copy(), instance.ub.copy()
    lb[fixed] = ub[fixed] = np.round(res.x[fixed])
    remaining = None if time_limit is None else time_limit - (time.perf_counter() - start)
    res2 = _highs(instance, instance.integrality, lb, ub, gap, remaining)
    if res2.x is None:
        raise SolverError(f"HiGHS failed to complete the recourse assignment: {res2.message}")
    x = np.asarray(res2.x, float)
    ints = instance.integrality.astype(bool)
    x[ints] = np.round(x[ints])
    obj = instance.objective(x)
    achieved = max(0.0, bound - obj) / max(abs(obj), 1e-9)
    status = "optimal_within_gap" if res.status == 0 and res2.status == 0 and achieved <= gap + 1e-9 else "time_limit"
    return SolveResult(obj, x, achieved, time.perf_counter() - start, status, "highs")


def solve(instance: MilpInstance, backend: str = "highs", gap: float = 1e-3,
          time_limit: float | None = None) -> SolveResult:
    """Solve ``instance`` with the named backend (``highs`` or ``enumerate``)."""
    if backend == "highs":
        return _solve_highs(instance, gap, time_limit)
    if backend == "enumerate":
        return enumerate_exact(instance)
    raise SolverError(f"backend {backend!r} is not available (choose 'highs' or 'enumerate')")


def to_lp(instance: MilpInstance, path=None) -> str:
    """Render the instance in CPLEX LP text format (and write it if ``path`` is given)."""
    names = instance.var_names()
    fams = instance.row_families

    def terms(cols, vals):
        parts, line = [], " "
        for col, v in zip(cols, vals):
            if v == 0:
                continue
            tok = f"{'+' if v >= 0 else '-'} {abs(v):.12g} {names[col]}"
            if len(line) + len(tok) > 250:
                parts.append(line)
                line = " "
            line += " " + tok
        parts.append(line if line.strip() else "  0 " + names[0])
        return "\n".join(parts)

    out = ["\\ stochos roll model", "Maximize"]
    nz = np.flatnonzero(instance.c)
    out.append(" obj:\n" + terms(nz, instance.c[nz]))
    out.append("Subject To")
    A = instance.A
    counter: dict[str, int] = {}
    for k in range(instance.n_rows):
        lo_, hi_ = instance.row_lb[k], instance.row_ub[k]
        start, end = A.indptr[k], A.indptr[k + 1]
        fam = fams[instance.row_family[k]]
        counter[fam] = counter.get(fam, 0) + 1
        label = f"{fam}_{counter[fam]}"
        body = terms(A.indices[start:end], A.data[start:end])
        if lo_ == hi_:
            sense = f"= {lo_:.12g}"
        elif np.isinf(hi_):
            sense = f">= {lo_:.12g}"
        elif np.isinf(lo_):
            sense = f"<= {hi_:.12g}"
        else:
            out.append(f" {label}_lo:\n{body}\n >= {lo_:.12g}")
            label, sense = f"{label}_hi", f"<= {hi_:.12g}"
        out.append(f" {label}:\n{body}\n {sense}")
    out.append("Bounds")
    kinds = np.empty(instance.n_vars, dtype=object)
    for fam in instance.families.values():
        kinds[fam.offset:fam.offset + fam.size] = fam.kind
    for j, name in enumerate(names):
        lo_, hi_ = instance.lb[j], instance.ub[j]
        if kinds[j] == BINARY and lo_ == 0 and hi_ == 1:
            continue
        hi_txt = "+inf" if np.isinf(hi_) else f"{hi_:.12g}"
        out.append(f" {lo_:.12g} <= {name} <= {hi_txt}")
    general = [n for j, n in enumerate(names) if kinds[j] == INTEGER]
    binary = [n for j, n in enumerate(names) if kinds[j] == BINARY and instance.lb[j] == 0 and instance.ub[j] == 1]
    for title, group in (("General", general), ("Binary", binary)):
        if group:
            out.append(title)
            for k in range(0, len(group), 8):
                out.append(" " + " ".join(group[k:k + 8]))
    out.append("End")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ----------------------------------------------------------------------------
# exhaustive enumeration (test oracle for tiny instances)

MAX_ENUM = {"N_I": 2, "N_D": 3, "N_S": 4}


def _integer_excess(load: float, budget: float) -> int:
    return max(0, math.ceil(load - budget - 1e-9))


def _split_overtime(excess: int, p) -> tuple[int, int]:
    if p.Q <= p.C2:
        q = min(int(p.H), excess)
        return q, excess - q
    return 0, excess


def _sth_recourse(data: RollData, starts: dict[int, int], s: int) -> dict:
    """Cheapest second-stage STH values for fixed starts in scenario ``s``."""
    p = data.params
    der = data.derived
    n_i = len(data.zeta)
    u = np.zeros((24, n_i))
    b = np.zeros(n_i)
    for i, t0 in starts.items():
        a = der.a_sth[t0 - 1, i, s]
        n = int(min(a, 25 - t0))
        u[t0 - 1:t0 - 1 + n, i] = 1
        b[i] = max(0.0, t0 + a - 25)
    hours = np.arange(1, 25)
    x = u * (hours < p.t_D)[:, None]
    ax = max(0, int(x.sum(axis=1).max()) - int(p.B)) if n_i else 0
    excess = _integer_excess(x.sum(), p.B * p.W)
    q, aq = _split_overtime(excess, p)
    y = np.zeros((24, n_i))
    for i in range(n_i):
        base = data.zeta[i] * (1 - data.rho[i])
        restored = np.zeros(24)
        if i in starts:
            restored = np.minimum(1.0, (24 - starts[i]) / (24 - hours + p.g))
        rhs = np.minimum(base + restored, 1 - u[:, i])
        y[:, i] = (rhs >= 1 - 1e-9).astype(float)
    price = data.traj.price_sth[:, s]
    cap_each = p.R * der.f_sth[:, s][:, None] * y
    farm_cap = n_i * der.f_sth[:, s] * p.R * der.curtail[:, s]
    total = np.minimum(cap_each.sum(axis=1), farm_cap)
    total = np.where(price > 0, total, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(cap_each.sum(axis=1) > 0, total / cap_each.sum(axis=1), 0.0)
    pw = cap_each * share[:, None]
    w = (b > 0).astype(float)
    pen = data.penalties
    value = (
        float(price @ pw.sum(axis=1)) - p.Psi * x.sum() - p.Q * q
        - float(pen.U[s] * w.sum() + pen.Y[s] * b.sum()) - p.C1 * ax - p.C2 * aq
    )
    return dict(u=u, x=x, y=y, p=pw, q=q, aq=aq, ax=ax, b=b, w=w, value=value)


def _lth_recourse(data: RollData, days: dict[int, int], b_sum: float, s: int) -> dict:
    p = data.params
    der = data.derived
    n_i = len(data.zeta)
    n_d = der.a_lth.shape[0]
    mL = np.zeros((n_d, n_i))
    for i, d in days.items():
        mL[d - 1, i] = 1
    rL = (mL.sum(axis=1) > 0).astype(float)
    qL = np.zeros(n_d)
    aqL = np.zeros(n_d)
    yL = np.zeros((n_d, n_i))
    pL = np.zeros((n_d, n_i))
    value = 0.0
    price = data.traj.price_lth[:, s]
    for d in range(1, n_d + 1):
        load = float(der.a_lth[d - 1, :, s] @ mL[d - 1]) + (b_sum if d == 1 else 0.0)
        qL[d - 1], aqL[d - 1] = _split_overtime(_integer_excess(load, p.B * p.W), p)
        f = der.f_lth[d - 1, s]
        for i in range(n_i):
            zl = der.zeta_lth[d - 1, i, s]
            base = zl * (1 - data.rho[i])
            if i in days:
                restored = min(1.0, (n_d - days[i]) / (n_d - d + p.g))
            else:
                restored = 1.0
            yL[d - 1, i] = 1.0 if base + restored >= 1 - 1e-9 else 0.0
            cap = 24 * p.R * f * yL[d - 1, i]
            if mL[d - 1, i]:
                cap = min(cap, 24 * p.R * f - p.R * f * min(der.a_lth[d - 1, i, s], 24.0) * zl)
            pL[d - 1, i] = max(cap, 0.0) if price[d - 1] > 0 else 0.0
            if mL[d - 1, i]:
                repair = (1 - data.rho[i]) * (zl * p.K + (1 - zl) * p.Phi)
                value -= repair + p.Psi * der.a_lth[d - 1, i, s]
        value += price[d - 1] * pL[d - 1].sum() - p.Omega * rL[d - 1] - p.Q * qL[d - 1] - p.C2 * aqL[d - 1]
    return dict(mL=mL, rL=rL, qL=qL, aqL=aqL, yL=yL, pL=pL, value=value)


def enumerate_exact(instance: MilpInstance) -> SolveResult:
    """Exhaustive search over first-stage starts and vessel choice.

    For every first-stage choice, each scenario's LTH day assignment is
    enumerated too; the remaining auxiliaries are set to their cheapest
    feasible values, which are unique given the maintenance decisions.
    """
    start_clock = time.perf_counter()
    data: RollData = instance.metadata["data"]
    n_i, n_d, n_s = data.dims
    if n_i > MAX_ENUM["N_I"] or n_d > MAX_ENUM["N_D"] or n_s > MAX_ENUM["N_S"]:
        raise SolverError(f"instance {n_i}x{n_d}x{n_s} exceeds the enumeration bound {MAX_ENUM}")
    p = data.params
    pending = [i for i in range(n_i) if data.theta[i]]
    hours = range(1, 25)

    def daylight_ok(t):
        return (p.t_R == 0 or 1 <= t / p.t_R) and 1 <= p.t_D / t

    options = [None] + [t for t in hours if daylight_ok(t)]
    best = None
    sth_cache: dict = {}
    for choice in itertools.product(options, repeat=len(pending)):
        starts = {i: t for i, t in zip(pending, choice) if t is not None}
        repair = sum((1 - data.rho[i]) * (data.zeta[i] * p.K + (1 - data.zeta[i]) * p.Phi) for i in starts)
        free = [i for i in pending if i not in starts]
        for r in (0, 1):
            if starts and not r:
                continue
            total = -repair - p.Omega * r
            plan = []
            for s in range(n_s):
                key = (tuple(sorted(starts.items())), s)
                if key not in sth_cache:
                    sth_cache[key] = _sth_recourse(data, starts, s)
                sth = sth_cache[key]
                best_l = None
                for days in itertools.product(range(1, n_d + 1), repeat=len(free)):
                    lth = _lth_recourse(data, dict(zip(free, days)), float(sth["b"].sum()), s)
                    if best_l is None or lth["value"] > best_l["value"] + 1e-9:
                        best_l = lth
                total += (sth["value"] + best_l["value"]) / n_s
                plan.append((sth, best_l))
            if best is None or total > best[0] + 1e-9:
                best = (total, starts, r, plan)

    total, starts, r, plan = best
    x = np.zeros(instance.n_vars)

    def put(name, values):
        x[instance.columns(name)] = values

    m = np.zeros((24, n_i))
    for i, t in starts.items():
        m[t - 1, i] = 1
    put("m", m)
    put("r", r)
    for name in ("u", "x", "y", "p"):
        put(name, np.stack([sth[name] for sth, _ in plan], axis=-1))
    for name in ("b", "w"):
        put(name, np.stack([sth[name] for sth, _ in plan], axis=-1))
    for name in ("q", "aq", "ax"):
        put(name, np.array([sth[name] for sth, _ in plan], float))
    for name in ("mL", "yL", "pL"):
        put(name, np.stack([lth[name] for _, lth in plan], axis=-1))
    for name in ("rL", "qL", "aqL"):
        put(name, np.stack([lth[name] for _, lth in plan], axis=-1))
    wall = time.perf_counter() - start_clock
    return SolveResult(float(total), x, 0.0, wall, "optimal_within_gap", "enumerate")
