"""Feasibility solvers for :class:`LinearProgram` and MPS interchange.

The internal path is a dense revised simplex (phase I, optional phase II)
with an explicitly updated basis inverse, plus depth-first branch and
bound. A HiGHS path through scipy handles instances too large for the
dense method. Every reported feasible point is re-checked against the
raw rows.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from .lp import LinearProgram

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64
BLAND_AFTER = 1000
MAX_PIVOTS = 1_000_000
MAX_NODES = 100_000

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"
NUMERIC_FAILURE = "numeric-failure"
UNBOUNDED = "unbounded"


@dataclass
class SolveResult:
    status: str
    x: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


class _NumericFailure(Exception):
    pass


# ---------------------------------------------------------------- standard form

def _standard_form(lp: LinearProgram, lb: np.ndarray, ub: np.ndarray):
    """Rewrite as ``M y = b, y >= 0`` with b >= 0 and a starting basis.

    Returns ``(M, b, basis, n_struct, n_art_start, recover)`` where
    ``recover(y)`` maps back to the original variables, or None when the
    bounds are inconsistent.
    """
    n = lp.n_vars
    if np.any(lb > ub + FEAS_TOL):
        return None
    A = lp.A.toarray()
    off = np.zeros(n)
    cols = []           # (orig var, sign) per structural column
    ub_rows = []        # (column index, range)
    for j in range(n):
        l, u = lb[j], ub[j]
        if np.isfinite(l) and np.isfinite(u) and u - l <= 1e-12:
            off[j] = l
            continue
        if np.isfinite(l):
            off[j] = l
            cols.append((j, 1.0))
            if np.isfinite(u):
                ub_rows.append((len(cols) - 1, u - l))
        elif np.isfinite(u):
            off[j] = u
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    n_s = len(cols)
    m0 = lp.n_rows
    T = np.zeros((n, n_s))
    for k, (j, sg) in enumerate(cols):
        T[j, k] = sg
    rows = A @ T if n_s else np.zeros((m0, 0))
    b = lp.rhs - A @ off
    sense = list(lp.sense)
    if ub_rows:
        U = np.zeros((len(ub_rows), n_s))
        for i, (k, rng) in enumerate(ub_rows):
            U[i, k] = 1.0
        rows = np.vstack([rows, U])
        b = np.concatenate([b, [r for _, r in ub_rows]])
        sense += ["L"] * len(ub_rows)
    m = rows.shape[0]
    slack_cols = []
    for i, s in enumerate(sense):
        if s != "E":
            slack_cols.append((i, 1.0 if s == "L" else -1.0))
    S = np.zeros((m, len(slack_cols)))
    for k, (i, sg) in enumerate(slack_cols):
        S[i, k] = sg
    M = np.hstack([rows, S])
    neg = b < 0
    M[neg] *= -1
    b = np.where(neg, -b, b)
    basis = [-1] * m
    for k, (i, _) in enumerate(slack_cols):
        if M[i, n_s + k] > 0:
            basis[i] = n_s + k
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art_start = M.shape[1]
    if art_rows:
        Aart = np.zeros((m, len(art_rows)))
        for k, i in enumerate(art_rows):
            Aart[i, k] = 1.0
            basis[i] = n_art_start + k
        M = np.hstack([M, Aart])

    def recover(y):
        x = off.copy()
        for k, (j, sg) in enumerate(cols):
            x[j] += sg * y[k]
        return x

    return M, b, basis, n_s, n_art_start, recover


class _Simplex:
    def __init__(self, M, b, basis, max_pivots):
        self.M = M
        self.b = b
        self.basis = list(basis)
        self.m, self.N = M.shape
        self.max_pivots = max_pivots
        self.pivots = 0
        self.degenerate_run = 0
        self.bland = False
        self.since_refactor = 0
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise _NumericFailure("singular basis") from exc
        if not np.all(np.isfinite(self.Binv)) or (self.m and np.abs(self.Binv).max() > 1e12):
            raise _NumericFailure("ill-conditioned basis")
        self.xB = self.Binv @ self.b
        self.xB[(self.xB < 0) & (self.xB > -1e-9)] = 0.0
        self.since_refactor = 0

    def pivot(self, r, j, u):
        theta = self.xB[r] / u[r]
        self.xB -= theta * u
        self.xB[r] = theta
        self.xB[(self.xB < 0) & (self.xB > -1e-9)] = 0.0
        row = self.Binv[r] / u[r]
        self.Binv -= np.outer(u, row)
        self.Binv[r] = row
        self.basis[r] = j
        self.pivots += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self, c, allowed):
        """Minimize ``c y`` over columns in ``allowed``. Returns 'optimal', 'unbounded' or 'limit'."""
        is_basic = np.zeros(self.N, dtype=bool)
        while True:
            if self.pivots >= self.max_pivots:
                return "limit"
            is_basic[:] = False
            is_basic[self.basis] = True
            y = c[self.basis] @ self.Binv
            d = c - y @ self.M
            cand = allowed & ~is_basic & (d < -PIVOT_TOL)
            if not cand.any():
                return "optimal"
            if self.bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                dj = np.where(cand, d, np.inf)
                j = int(np.argmin(dj))
            u = self.Binv @ self.M[:, j]
            pos = u > PIVOT_TOL
            if not pos.any():
                return "unbounded"
            ratios = np.full(self.m, np.inf)
            ratios[pos] = self.xB[pos] / u[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            r = int(min(ties, key=lambda i: self.basis[i]))
            if best <= 1e-12:
                self.degenerate_run += 1
                if self.degenerate_run >= BLAND_AFTER:
                    self.bland = True
            else:
                self.degenerate_run = 0
            self.pivot(r, j, u)


def _solve_bounds(lp: LinearProgram, lb, ub, max_pivots=MAX_PIVOTS, objective=None):
    sf = _standard_form(lp, lb, ub)
    if sf is None:
        return INFEASIBLE, None, 0
    M, b, basis, n_s, n_art, recover = sf
    if M.shape[0] == 0:
        return FEASIBLE, recover(np.zeros(M.shape[1])), 0
    sx = _Simplex(M, b, basis, max_pivots)
    c1 = np.zeros(sx.N)
    c1[n_art:] = 1.0
    allowed = np.ones(sx.N, dtype=bool)
    out = sx.run(c1, allowed)
    if out == "limit":
        return ITERATION_LIMIT, None, sx.pivots
    sx.refactor()
    infeas = float(sx.xB[np.asarray(sx.basis) >= n_art].sum())
    scale = max(1.0, float(np.abs(b).max()))
    if infeas > FEAS_TOL * scale:
        return INFEASIBLE, None, sx.pivots
    if objective is not None:
        # Drive zero-valued artificials out, then optimize over real columns.
        for r in range(sx.m):
            if sx.basis[r] >= n_art:
                row = sx.Binv[r] @ M[:, :n_art]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                nz = [j for j in nz if j not in sx.basis]
                if nz:
                    j = int(nz[0])
                    sx.pivot(r, j, sx.Binv @ M[:, j])
        c2 = np.zeros(sx.N)
        T = np.zeros(n_s)
        # objective on structural columns via the recovery map
        x0 = recover(np.zeros(M.shape[1]))
        for k in range(n_s):
            e = np.zeros(M.shape[1])
            e[k] = 1.0
            T[k] = objective @ (recover(e) - x0)
        c2[:n_s] = T
        allowed = np.ones(sx.N, dtype=bool)
        allowed[n_art:] = False
        out = sx.run(c2, allowed)
        if out == "limit":
            return ITERATION_LIMIT, None, sx.pivots
        if out == "unbounded":
            return UNBOUNDED, None, sx.pivots
        sx.refactor()
    y = np.zeros(sx.N)
    y[sx.basis] = np.maximum(sx.xB, 0.0)
    return FEASIBLE, recover(y), sx.pivots


def solve_lp(lp: LinearProgram, max_pivots: int = MAX_PIVOTS, lb=None, ub=None) -> SolveResult:
    """Find a point of the continuous relaxation, or certify that none exists."""
    t0 = time.perf_counter()
    lb = lp.lb if lb is None else lb
    ub = lp.ub if ub is None else ub
    try:
        status, x, piv = _solve_bounds(lp, lb, ub, max_pivots, lp.objective)
    except _NumericFailure as exc:
        return SolveResult(NUMERIC_FAILURE, None, {"time": time.perf_counter() - t0}, str(exc))
    stats = {"iterations": piv, "nodes": 0, "time": time.perf_counter() - t0, "backend": "internal"}
    if status == FEASIBLE:
        viol = _violation(lp, x, lb, ub)
        if viol > FEAS_TOL:
            return SolveResult(NUMERIC_FAILURE, x, stats, f"re-check violation {viol:.3g}")
    return SolveResult(status, x, stats)


def _violation(lp, x, lb, ub) -> float:
    bv = np.maximum(np.maximum(lb - x, x - ub), 0).max(initial=0.0)
    return max(float(bv), float(lp.residuals(x).max(initial=0.0)))


def solve_ilp(lp: LinearProgram, max_nodes: int = MAX_NODES, max_pivots: int = MAX_PIVOTS) -> SolveResult:
    """Depth-first branch and bound on the most fractional integer variable."""
    t0 = time.perf_counter()
    stack = [(lp.lb.copy(), lp.ub.copy())]
    nodes = pivots = 0
    ints = np.flatnonzero(lp.integer)
    while stack:
        if nodes >= max_nodes:
            return SolveResult(ITERATION_LIMIT, None,
                               {"iterations": pivots, "nodes": nodes, "time": time.perf_counter() - t0,
                                "backend": "internal"}, "node limit")
        lb, ub = stack.pop()
        nodes += 1
        try:
            status, x, piv = _solve_bounds(lp, lb, ub, max_pivots)
        except _NumericFailure as exc:
            return SolveResult(NUMERIC_FAILURE, None, {"nodes": nodes}, str(exc))
        pivots += piv
        if status == ITERATION_LIMIT:
            return SolveResult(ITERATION_LIMIT, None, {"iterations": pivots, "nodes": nodes})
        if status != FEASIBLE:
            continue
        frac = np.abs(x[ints] - np.round(x[ints]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            xr = x.copy()
            xr[ints] = np.round(x[ints])
            if _violation(lp, xr, lp.lb, lp.ub) <= FEAS_TOL:
                return SolveResult(FEASIBLE, xr, {"iterations": pivots, "nodes": nodes,
                                                  "time": time.perf_counter() - t0, "backend": "internal"})
            if frac.size == 0 or frac.max() == 0:
                continue
        k = int(ints[np.argmax(frac)])
        v = x[k]
        down_ub = ub.copy()
        down_ub[k] = math.floor(v + 1e-12)
        up_lb = lb.copy()
        up_lb[k] = math.ceil(v - 1e-12)
        if up_lb[k] == down_ub[k]:
            up_lb[k] += 1
        stack.append((up_lb, ub))
        stack.append((lb, down_ub))
    return SolveResult(INFEASIBLE, None, {"iterations": pivots, "nodes": nodes,
                                         "time": time.perf_counter() - t0, "backend": "internal"})


def solve_highs(lp: LinearProgram, integer: bool = True, time_limit: Optional[float] = None) -> SolveResult:
    """Solve through scipy's HiGHS interface; the point is re-checked here."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    t0 = time.perf_counter()
    lo = np.where(lp.sense == "L", -np.inf, lp.rhs)
    hi = np.where(lp.sense == "G", np.inf, lp.rhs)
    c = np.zeros(lp.n_vars) if lp.objective is None else lp.objective
    cons = [LinearConstraint(lp.A, lo, hi)] if lp.n_rows else []

    def run(presolve):
        opts = {"presolve": presolve}
        if time_limit is not None:
            opts["time_limit"] = time_limit
        return milp(c, constraints=cons, bounds=Bounds(lp.lb, lp.ub),
                    integrality=lp.integer.astype(int) if integer else None, options=opts)

    res = run(True)
    if res.status == 2:
        # HiGHS presolve has been seen to declare feasible integer programs
        # infeasible; only trust the verdict when the plain solve agrees.
        res = run(False)
    stats = {"time": time.perf_counter() - t0, "backend": "highs", "message": res.message}
    if res.status == 0 and res.x is not None:
        x = res.x.copy()
        if integer:
            x[lp.integer] = np.round(x[lp.integer])
        viol = _violation(lp, x, lp.lb, lp.ub)
        if viol > FEAS_TOL:
            return SolveResult(NUMERIC_FAILURE, x, stats, f"re-check violation {viol:.3g}")
        return SolveResult(FEASIBLE, x, stats)
    if res.status == 2:
        return SolveResult(INFEASIBLE, None, stats, res.message)
    if res.status == 1:
        return SolveResult(ITERATION_LIMIT, None, stats, res.message)
    return SolveResult(NUMERIC_FAILURE, None, stats, res.message)


def solve(lp: LinearProgram, backend: str = "internal", integer: Optional[bool] = None) -> SolveResult:
    """Dispatch to a backend; ``integer`` defaults to whether any variable is integral."""
    integer = bool(lp.integer.any()) if integer is None else integer
    if backend == "internal":
        if integer:
            return solve_ilp(lp)
        return solve_lp(lp)
    if backend == "highs":
        return solve_highs(lp, integer)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------- MPS

def _fmt(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    # Fields start in columns 2, 5, 15, 25, 40, 50; an entry reaching the next
    # field's column pushes that field right by one blank.
    s = " " + f1
    s = s.ljust(4) + f2
    if f3 or f4:
        s = s.ljust(14) + " " * (1 if len(s) >= 14 else 0) + f3
        s = s.ljust(24) + " " * (1 if len(s) >= 24 else 0) + f4
    if f5 or f6:
        s = s.ljust(39) + " " * (1 if len(s) >= 39 else 0) + f5
        s = s.ljust(49) + " " * (1 if len(s) >= 49 else 0) + f6
    return s.rstrip()


def mps_text(lp: LinearProgram, name: str = "COUNTING") -> str:
    out = [f"NAME          {name}", "ROWS", _line("N", "OBJ")]
    for nm, s in zip(lp.row_names, lp.sense):
        out.append(_line(s, nm))
    out.append("COLUMNS")
    A = lp.A.tocsc()
    in_int = False
    marker = 0
    for j, vn in enumerate(lp.var_names):
        if lp.integer[j] != in_int:
            tag = "'INTORG'" if lp.integer[j] else "'INTEND'"
            out.append(_line("", f"MARKER{marker:04d}", "'MARKER'", "", tag))
            marker += 1
            in_int = bool(lp.integer[j])
        entries = []
        if lp.objective is not None and lp.objective[j] != 0:
            entries.append(("OBJ", lp.objective[j]))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[lo:hi], A.data[lo:hi]):
            entries.append((lp.row_names[i], v))
        if not entries:
            entries.append(("OBJ", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", vn, pair[0][0], _fmt(pair[0][1]), pair[1][0], _fmt(pair[1][1])))
            else:
                out.append(_line("", vn, pair[0][0], _fmt(pair[0][1])))
    if in_int:
        out.append(_line("", f"MARKER{marker:04d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    nz = [(nm, v) for nm, v in zip(lp.row_names, lp.rhs) if v != 0]
    for k in range(0, len(nz), 2):
        pair = nz[k:k + 2]
        if len(pair) == 2:
            out.append(_line("", "RHS", pair[0][0], _fmt(pair[0][1]), pair[1][0], _fmt(pair[1][1])))
        else:
            out.append(_line("", "RHS", pair[0][0], _fmt(pair[0][1])))
    bounds = []
    for j, vn in enumerate(lp.var_names):
        l, u = lp.lb[j], lp.ub[j]
        if np.isfinite(l) and np.isfinite(u) and l == u:
            bounds.append(_line("FX", "BND", vn, _fmt(l)))
            continue
        if l == -np.inf and u == np.inf:
            bounds.append(_line("FR", "BND", vn))
            continue
        if l == -np.inf:
            bounds.append(_line("MI", "BND", vn))
        elif l != 0:
            bounds.append(_line("LO", "BND", vn, _fmt(l)))
        if np.isfinite(u):
            bounds.append(_line("UP", "BND", vn, _fmt(u)))
        elif lp.integer[j]:
            # Some readers default integer columns to an upper bound of one.
            bounds.append(_line("PL", "BND", vn))
    if bounds:
        out.append("BOUNDS")
        out.extend(bounds)
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(lp: LinearProgram, path, name: str = "COUNTING") -> Path:
    path = Path(path)
    path.write_text(mps_text(lp, name))
    return path


def read_mps(path) -> LinearProgram:
    """Parse an MPS file written by :func:`export_mps` (whitespace-separated fields)."""
    section = None
    row_names, senses = [], []
    row_index = {}
    cols: dict[str, dict] = {}
    col_order: list[str] = []
    integer: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    bnd: dict[str, list] = {}
    in_int = False
    obj = {}
    for raw in Path(path).read_text().splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            continue
        tok = raw.split()
        if section == "ROWS":
            if tok[0] == "N":
                continue
            row_index[tok[1]] = len(row_names)
            row_names.append(tok[1])
            senses.append(tok[0])
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            vn = tok[0]
            if vn not in cols:
                cols[vn] = {}
                col_order.append(vn)
                integer[vn] = in_int
            for rn, v in zip(tok[1::2], tok[2::2]):
                if rn == "OBJ":
                    obj[vn] = float(v)
                else:
                    cols[vn][rn] = float(v)
        elif section == "RHS":
            for rn, v in zip(tok[1::2], tok[2::2]):
                rhs[rn] = float(v)
        elif section == "BOUNDS":
            kind, vn = tok[0], tok[2]
            b = bnd.setdefault(vn, [0.0, np.inf])
            if kind == "FX":
                b[0] = b[1] = float(tok[3])
            elif kind == "LO":
                b[0] = float(tok[3])
            elif kind == "UP":
                b[1] = float(tok[3])
            elif kind == "MI":
                b[0] = -np.inf
            elif kind == "FR":
                b[0], b[1] = -np.inf, np.inf
    n = len(col_order)
    rows, cidx, vals = [], [], []
    for j, vn in enumerate(col_order):
        for rn, v in cols[vn].items():
            rows.append(row_index[rn])
            cidx.append(j)
            vals.append(v)
    A = csr_matrix((vals, (rows, cidx)), shape=(len(row_names), n))
    lb = np.array([bnd.get(v, [0.0, np.inf])[0] for v in col_order])
    ub = np.array([bnd.get(v, [0.0, np.inf])[1] for v in col_order])
    objective = np.array([obj.get(v, 0.0) for v in col_order]) if any(obj.values()) else None
    return LinearProgram(A, senses, [rhs.get(r, 0.0) for r in row_names], lb, ub,
                         [integer[v] for v in col_order], col_order, row_names, objective=objective)


def write_solution(lp: LinearProgram, x, path) -> Path:
    path = Path(path)
    lines = ["# variable value"] + [f"{nm} {_fmt(v)}" for nm, v in zip(lp.var_names, x)]
    path.write_text("\n".join(lines) + "\n")
    return path


def import_solution(lp: LinearProgram, path) -> SolveResult:
    """Read ``name value`` lines from an external solver and re-validate them."""
    index = {nm: j for j, nm in enumerate(lp.var_names)}
    x = np.zeros(lp.n_vars)
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 2:
            raise ValueError(f"malformed solution line: {raw!r}")
        if tok[0] not in index:
            raise KeyError(f"unknown variable {tok[0]!r}")
        x[index[tok[0]]] = float(tok[1])
    ok = lp.is_feasible(x, FEAS_TOL, INT_TOL)
    if ok:
        x[lp.integer] = np.round(x[lp.integer])
    return SolveResult(FEASIBLE if ok else INFEASIBLE, x, {"backend": "import"},
                       "" if ok else f"imported point violates rows by {lp.max_violation(x):.3g}")
