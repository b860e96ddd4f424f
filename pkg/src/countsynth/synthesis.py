"""Prefix-suffix feasibility programs for counting problems.

A solution steers the fleet histogram for ``T`` steps with aggregate
inputs and then lets integer (or relaxed) assignments circulate on a set
of cycles forever. :func:`build_multiclass` emits the rows in a fixed
order: prefix counts, suffix counts, prefix-suffix connection, dynamics,
and mass conservation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .abstraction import DiscreteCountingSet
from .aggregate import (DEFAULT_ROW_CAP, _lcm, coprime_partition, length_partition, membership, step,
                        suffix_peak)
from .errors import DivisibilityError, GraphError, LcmCapExceeded
from .graph import Cycle, LabeledDigraph, diameter, prune_zero_count, scc
from .lp import LinearProgram, rows_from_triplets, stack_rows

SUFFIX_MODES = ("auto", "exact", "coprime", "conservative")


def aggregate_initial(states, n_states: int) -> np.ndarray:
    """Histogram of initial discrete states."""
    states = np.asarray(states, dtype=np.int64)
    if np.any(states < 0) or np.any(states >= n_states):
        raise IndexError("initial state index out of range")
    return np.bincount(states, minlength=n_states).astype(np.int64)


@dataclass
class ProblemInstance:
    """One class of identical subsystems together with its counting constraints.

    ``cycle_coverage`` records how the cycle set was produced, e.g.
    ``("simple", max_len)`` for exhaustive simple-cycle enumeration; it
    feeds :func:`infeasibility_verdict`.
    """

    graph: LabeledDigraph
    w0: np.ndarray
    constraints: list
    T: int
    cycles: list
    exact: bool = True
    relax_eps: float = 0.0
    scale: int = 1
    contracted: bool = False
    cycle_coverage: Optional[tuple] = None
    restrict_reachable: bool = False
    suffix_mode: str = "auto"
    row_cap: int = DEFAULT_ROW_CAP
    tau: Optional[float] = None
    fixed_alphas: Optional[list] = None
    name: str = ""

    def __post_init__(self):
        self.w0 = np.asarray(self.w0)
        if self.w0.shape != (self.graph.n_nodes,):
            raise ValueError("w0 must be indexed by graph node")
        if np.any(self.w0 < 0):
            raise ValueError("w0 must be nonnegative")
        if self.exact and not np.all(self.w0 == np.round(self.w0)):
            raise ValueError("exact instances need an integer w0")
        if self.T < 0:
            raise ValueError("horizon must be nonnegative")
        if self.relax_eps < 0:
            raise ValueError("relaxation must be nonnegative")
        if self.suffix_mode not in SUFFIX_MODES:
            raise ValueError(f"suffix_mode must be one of {SUFFIX_MODES}")
        for c in self.constraints:
            if c.mask.shape != self.graph.succ.shape:
                raise ValueError(f"counting set {c.name!r} does not match the graph shape")
        self.cycles = list(self.cycles)
        for c in self.cycles:
            if not c.is_closed_in(self.graph):
                raise GraphError(f"cycle {c.pairs} is not a closed walk of the graph")
        if self.fixed_alphas is not None:
            if len(self.fixed_alphas) != len(self.cycles) or any(
                    len(a) != len(c) for a, c in zip(self.fixed_alphas, self.cycles)):
                raise ValueError("fixed assignments must match the cycles")

    @property
    def N(self):
        return self.w0.sum()

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def n_modes(self) -> int:
        return self.graph.n_modes

    def pruned(self) -> "ProblemInstance":
        """Same instance on the graph pruned by the zero-bound sets; cycles using
        removed actions are dropped."""
        g = prune_zero_count(self.graph, self.constraints)
        cycles = [c for c in self.cycles if c.is_closed_in(g)]
        return replace(self, graph=g, cycles=cycles)


@dataclass
class JointConstraint:
    """Counting constraint across classes; ``masks[h]`` is class h's set or None."""

    masks: list
    bound: float
    name: str = ""


@dataclass
class _Row:
    masks: dict
    bound: float
    name: str


def _reach_layers(g: LabeledDigraph, w0, T: int, cycles=()) -> list[np.ndarray]:
    """Nodes that can carry mass at each time ``0..T``.

    A node qualifies at time ``s`` if it is reached from the support of
    ``w0`` in exactly ``s`` steps and, when cycles are given, reaches a
    cycle node in exactly ``T - s`` steps.
    """
    fwd = [np.asarray(w0) > 0]
    for _ in range(T):
        tgt = g.succ[fwd[-1]]
        nxt = np.zeros(g.n_nodes, dtype=bool)
        nxt[tgt[tgt >= 0]] = True
        fwd.append(nxt)
    if not cycles:
        return fwd
    back = np.zeros(g.n_nodes, dtype=bool)
    for c in cycles:
        back[list(c.states)] = True
    bwd = [back]
    for _ in range(T):
        cur = bwd[-1]
        bwd.append(np.any(g.valid & cur[np.maximum(g.succ, 0)], axis=1))
    return [fwd[s] & bwd[T - s] for s in range(T + 1)]


def build_lp(instance: ProblemInstance) -> LinearProgram:
    """Feasibility program of a single-class instance."""
    return build_multiclass([instance], [])


def _plan_suffix(lengths, mode: str, cap: int):
    """Pick the grouping of hitting cycles for one constraint's suffix rows."""
    if not lengths:
        return "exact", []
    everything = [list(range(len(lengths)))]
    L = _lcm(lengths)
    if mode in ("auto", "exact") and L <= cap:
        return "exact", everything
    if mode == "exact":
        raise LcmCapExceeded(f"suffix needs {L} rows, above the cap {cap}; enable conservative counting")
    if mode in ("auto", "coprime"):
        groups = coprime_partition(lengths)
        rows = sum(_lcm(lengths[i] for i in g) for g in groups)
        if rows + 1 <= cap:
            return ("exact", everything) if len(groups) == 1 else ("coprime", groups)
        if mode == "coprime":
            raise LcmCapExceeded(f"co-prime suffix needs {rows} rows, above the cap {cap}")
    groups = length_partition(lengths)
    rows = sum(lengths[g[0]] for g in groups)
    if rows + 1 > cap:
        raise LcmCapExceeded(f"conservative suffix needs {rows} rows, above the cap {cap}")
    return "conservative", groups


def build_multiclass(instances: Sequence[ProblemInstance], joint: Sequence[JointConstraint] = ()) -> LinearProgram:
    """Feasibility program for several classes sharing joint counting constraints.

    Columns per class: cycle assignments, then ``r(0..T-1)`` flattened as
    (step, node, mode), then ``w(1..T)``. Suffix rows for constraints
    whose cycles split into several groups use one auxiliary column per
    group holding that group's peak count.
    """
    if not instances:
        raise ValueError("need at least one class")
    H = len(instances)
    T = instances[0].T
    if any(inst.T != T for inst in instances):
        raise ValueError("all classes must share the prefix horizon")
    taus = {inst.tau for inst in instances if inst.tau is not None}
    if len(taus) > 1:
        raise ValueError("all classes must share the sampling period")
    exact = all(inst.exact for inst in instances)
    relax = 0.0 if exact else max(inst.relax_eps for inst in instances)
    mode = instances[0].suffix_mode
    cap = instances[0].row_cap
    pfx = [f"K{h}_" if H > 1 else "" for h in range(H)]

    # ---- columns
    names: list[str] = []
    blocks: dict = {}
    cls_off = []
    for h, inst in enumerate(instances):
        n, m = inst.n_nodes, inst.n_modes
        info = {"alpha": []}
        for j, c in enumerate(inst.cycles):
            start = len(names)
            names.extend(f"{pfx[h]}C_alpha_{j}_{i}" for i in range(len(c)))
            blocks[f"{pfx[h]}alpha_{j}"] = slice(start, len(names))
            info["alpha"].append(start)
        start = len(names)
        names.extend(f"{pfx[h]}C_r_{s}_{q}_{k}" for s in range(T) for q in range(n) for k in range(m))
        blocks[f"{pfx[h]}r"] = slice(start, len(names))
        info["r"] = start
        start = len(names)
        names.extend(f"{pfx[h]}C_w_{s}_{q}" for s in range(1, T + 1) for q in range(n))
        blocks[f"{pfx[h]}w"] = slice(start, len(names))
        info["w"] = start
        cls_off.append(info)
    n_main = len(names)
    lb = np.zeros(n_main)
    ub = np.full(n_main, np.inf)
    for h, inst in enumerate(instances):
        n, m = inst.n_nodes, inst.n_modes
        rb = cls_off[h]["r"]
        invalid = ~inst.graph.valid
        rub = np.where(np.broadcast_to(invalid, (T, n, m)), 0.0, np.inf)
        if inst.restrict_reachable:
            layers = _reach_layers(inst.graph, inst.w0, T, inst.cycles)
            dst = np.maximum(inst.graph.succ, 0)
            for s in range(T):
                rub[s][~layers[s]] = 0.0
                rub[s][~layers[s + 1][dst]] = 0.0
            wub = np.stack([np.where(layers[s], np.inf, 0.0) for s in range(1, T + 1)]) if T else np.zeros((0, n))
            ub[cls_off[h]["w"]:cls_off[h]["w"] + T * n] = wub.ravel()
        ub[rb:rb + T * n * m] = rub.ravel()
        if inst.fixed_alphas is not None:
            for j, a in enumerate(inst.fixed_alphas):
                sl = slice(cls_off[h]["alpha"][j], cls_off[h]["alpha"][j] + len(a))
                lb[sl] = ub[sl] = np.asarray(a, dtype=float)

    # ---- global constraint list
    rows_spec: list[_Row] = []
    for h, inst in enumerate(instances):
        for l, c in enumerate(inst.constraints):
            rows_spec.append(_Row({h: c.mask}, c.bound, f"{pfx[h]}{c.name or l}"))
    for l, jc in enumerate(joint):
        if len(jc.masks) != H:
            raise ValueError("joint constraint needs one entry per class")
        masks = {h: getattr(mk, "mask", mk) for h, mk in enumerate(jc.masks) if mk is not None}
        rows_spec.append(_Row(masks, jc.bound, jc.name or f"joint{l}"))

    parts = []
    row_families = {}

    def add_family(key, part):
        start = sum(p[0].shape[0] for p in parts)
        parts.append(part)
        row_families[key] = slice(start, start + part[0].shape[0])

    # ---- 17a prefix counts
    ri, ci, rhs, rn = [], [], [], []
    for s in range(T):
        for l, row in enumerate(rows_spec):
            r_id = len(rhs)
            for h, mask in row.masks.items():
                inst = instances[h]
                n, m = inst.n_nodes, inst.n_modes
                flat = np.flatnonzero(np.asarray(mask, dtype=bool).ravel())
                ci.append(cls_off[h]["r"] + s * n * m + flat)
                ri.append(np.full(len(flat), r_id))
            rhs.append(row.bound + relax)
            rn.append(f"R17a_{s}_{l}")
    prefix_rows = (_cat(ri), _cat(ci), rhs, rn)

    # ---- 17b suffix counts; auxiliary columns follow the class blocks
    aux_names: list[str] = []
    suffix_modes = {}
    ri, ci, vi, rhs, rn = [], [], [], [], []
    for l, row in enumerate(rows_spec):
        hitting = []
        for h, mask in row.masks.items():
            if instances[h].fixed_alphas is not None:
                continue  # a pinned suffix has nothing left to decide
            for j, c in enumerate(instances[h].cycles):
                b = membership(c, np.asarray(mask, dtype=bool))
                if b.any():
                    hitting.append((h, j, c, b))
        lengths = [len(c) for _, _, c, _ in hitting]
        how, groups = _plan_suffix(lengths, mode, cap)
        suffix_modes[row.name] = how if hitting else "empty"
        group_aux = []
        if len(groups) > 1:
            for g in range(len(groups)):
                group_aux.append(n_main + len(aux_names))
                aux_names.append(f"C_t_{l}_{g}")
        for g, grp in enumerate(groups):
            Lg = _lcm(lengths[i] for i in grp)
            t = np.arange(Lg)
            base = len(rhs)
            for i in grp:
                h, j, c, b = hitting[i]
                a0 = cls_off[h]["alpha"][j]
                for pos in np.flatnonzero(b):
                    # Row t counts entry k of the cycle with (k + t) mod |C| == pos.
                    ri.append(base + t)
                    ci.append(a0 + (pos - t) % len(c))
                    vi.append(np.ones(Lg))
            if group_aux:
                ri.append(base + t)
                ci.append(np.full(Lg, group_aux[g]))
                vi.append(-np.ones(Lg))
                rhs.extend([0.0] * Lg)
                rn.extend(f"R17b_{l}_{g}_{k}" for k in range(Lg))
            else:
                rhs.extend([row.bound + relax] * Lg)
                rn.extend(f"R17b_{l}_{k}" for k in range(Lg))
        if group_aux:
            ri.append(np.full(len(group_aux), len(rhs)))
            ci.append(np.asarray(group_aux))
            vi.append(np.ones(len(group_aux)))
            rhs.append(row.bound + relax)
            rn.append(f"R17b_{l}_sum")
    n_total = n_main + len(aux_names)
    pr, pc, prhs, prn = prefix_rows
    add_family("17a", (rows_from_triplets(pr, pc, np.ones(len(pc)), len(prhs), n_total),
                       ["L"] * len(prhs), prhs, prn))
    add_family("17b", (rows_from_triplets(_cat(ri), _cat(ci), _cat(vi), len(rhs), n_total),
                       ["L"] * len(rhs), rhs, rn))

    # ---- 17c connection, 17d dynamics, 17e conservation
    for fam in ("17c", "17d", "17e"):
        ri, ci, vi, rhs, rn, sense = [], [], [], [], [], []
        for h, inst in enumerate(instances):
            n, m = inst.n_nodes, inst.n_modes
            g = inst.graph
            if fam == "17c":
                base = len(rhs)
                for j, c in enumerate(inst.cycles):
                    a0 = cls_off[h]["alpha"][j]
                    ri.append(base + np.asarray(c.states))
                    ci.append(a0 + np.arange(len(c)))
                    vi.append(np.ones(len(c)))
                if T > 0:
                    ri.append(base + np.arange(n))
                    ci.append(cls_off[h]["w"] + (T - 1) * n + np.arange(n))
                    vi.append(-np.ones(n))
                    rhs.extend([0.0] * n)
                else:
                    rhs.extend(inst.w0.astype(float).tolist())
                rn.extend(f"{pfx[h]}R17c_{q}" for q in range(n))
            elif fam == "17d":
                qs, ms = np.nonzero(g.valid)
                dst = g.succ[qs, ms]
                for s in range(T):
                    base = len(rhs)
                    ri.append(base + np.arange(n))
                    ci.append(cls_off[h]["w"] + s * n + np.arange(n))
                    vi.append(np.ones(n))
                    ri.append(base + dst)
                    ci.append(cls_off[h]["r"] + s * n * m + qs * m + ms)
                    vi.append(-np.ones(len(qs)))
                    rhs.extend([0.0] * n)
                    rn.extend(f"{pfx[h]}R17d_{s}_{q}" for q in range(n))
            else:
                for s in range(T):
                    base = len(rhs)
                    qq = np.repeat(np.arange(n), m)
                    kk = np.tile(np.arange(m), n)
                    ri.append(base + qq)
                    ci.append(cls_off[h]["r"] + s * n * m + qq * m + kk)
                    vi.append(np.ones(n * m))
                    if s == 0:
                        rhs.extend(inst.w0.astype(float).tolist())
                    else:
                        ri.append(base + np.arange(n))
                        ci.append(cls_off[h]["w"] + (s - 1) * n + np.arange(n))
                        vi.append(-np.ones(n))
                        rhs.extend([0.0] * n)
                    rn.extend(f"{pfx[h]}R17e_{s}_{q}" for q in range(n))
        add_family(fam, (rows_from_triplets(_cat(ri), _cat(ci), _cat(vi), len(rhs), n_total),
                         ["E"] * len(rhs), rhs, rn))

    A, sense, rhs, row_names = stack_rows(parts, n_total)
    lb = np.concatenate([lb, np.zeros(len(aux_names))])
    ub = np.concatenate([ub, np.full(len(aux_names), np.inf)])
    integer = np.full(n_total, exact)
    if aux_names:
        blocks["aux"] = slice(n_main, n_total)
    meta = {
        "classes": [{"n_nodes": inst.n_nodes, "n_modes": inst.n_modes, "T": T,
                     "cycle_lengths": [len(c) for c in inst.cycles], "scale": inst.scale,
                     "prefix": pfx[h]} for h, inst in enumerate(instances)],
        "suffix_modes": suffix_modes,
        "exact": exact,
        "relax_eps": relax,
        "n_aux": len(aux_names),
    }
    return LinearProgram(A, sense, rhs, lb, ub, integer, names + aux_names, row_names,
                         blocks=blocks, row_families=row_families, meta=meta)


def _cat(chunks):
    chunks = [np.asarray(c) for c in chunks]
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


# ---------------------------------------------------------------- solutions

@dataclass
class PrefixSuffixSolution:
    """Aggregate prefix ``r(0..T-1)``, ``w(0..T)`` and the suffix assignments."""

    w0: np.ndarray
    r: np.ndarray           # (T, n_nodes, n_modes)
    w: np.ndarray           # (T, n_nodes): w(1) .. w(T)
    cycles: list
    alphas: list
    provenance: str = "exact"
    scale: int = 1

    @property
    def T(self) -> int:
        return self.r.shape[0]

    def w_at(self, s: int) -> np.ndarray:
        return self.w0 if s == 0 else self.w[s - 1]

    def scaled(self, S: int) -> "PrefixSuffixSolution":
        """Multiply every count by ``S`` (inverse of instance scaling)."""
        return PrefixSuffixSolution(self.w0 * S, self.r * S, self.w * S, list(self.cycles),
                                    [a * S for a in self.alphas], self.provenance, self.scale * S)

    def as_integer(self) -> "PrefixSuffixSolution":
        cast = lambda a: np.rint(a).astype(np.int64)
        return PrefixSuffixSolution(cast(self.w0), cast(self.r), cast(self.w), list(self.cycles),
                                    [cast(a) for a in self.alphas], self.provenance, self.scale)

    def to_json(self) -> str:
        num = lambda a: np.asarray(a).tolist()
        return json.dumps({
            "format": "countsynth.solution", "version": 1,
            "provenance": self.provenance, "scale": self.scale,
            "w0": num(self.w0), "r": num(self.r), "w": num(self.w),
            "cycles": [c.to_json() for c in self.cycles],
            "alphas": [num(a) for a in self.alphas],
        })

    @classmethod
    def from_json(cls, text: str) -> "PrefixSuffixSolution":
        d = json.loads(text)
        if d.get("format") != "countsynth.solution":
            raise ValueError("not a countsynth solution document")
        w0 = np.asarray(d["w0"])
        r = np.asarray(d["r"]).reshape(-1, len(w0), max(1, len(d["r"][0][0]) if d["r"] else 1))
        w = np.asarray(d["w"]).reshape(-1, len(w0))
        return cls(w0, r, w, [Cycle.from_json(c) for c in d["cycles"]],
                   [np.asarray(a) for a in d["alphas"]], d["provenance"], d["scale"])


def extract_solution(lp: LinearProgram, x, instances, h: int = 0) -> PrefixSuffixSolution:
    """Pull class ``h``'s prefix and suffix out of an LP point."""
    if isinstance(instances, ProblemInstance):
        instances = [instances]
    inst = instances[h]
    pfx = lp.meta["classes"][h]["prefix"]
    x = np.asarray(x)
    T, n, m = inst.T, inst.n_nodes, inst.n_modes
    r = x[lp.blocks[f"{pfx}r"]].reshape(T, n, m)
    w = x[lp.blocks[f"{pfx}w"]].reshape(T, n)
    alphas = [x[lp.blocks[f"{pfx}alpha_{j}"]] for j in range(len(inst.cycles))]
    prov = "exact" if lp.meta["exact"] else "relaxed"
    sol = PrefixSuffixSolution(inst.w0.copy(), r.copy(), w.copy(), list(inst.cycles),
                               [a.copy() for a in alphas], prov, 1)
    return sol.as_integer() if lp.meta["exact"] else sol


def check_solution(instance: ProblemInstance, sol: PrefixSuffixSolution, atol: float = 1e-7,
                   row_cap: int = 10 ** 6) -> list[str]:
    """Independent re-check by replaying the dynamics; returns violation messages.

    Suffix counts are exact when the cycle lengths allow it within
    ``row_cap`` rows and conservative otherwise.
    """
    problems = []
    g = instance.graph
    w = np.asarray(instance.w0)
    relax = 0.0 if instance.exact else instance.relax_eps
    for s in range(sol.T):
        r = sol.r[s]
        try:
            w_next = step(w, r, g, atol)
        except ValueError as exc:
            problems.append(f"step {s}: {exc}")
            break
        for c in instance.constraints:
            cnt = float(np.sum(r[c.mask]))
            if cnt > c.bound + relax + atol:
                problems.append(f"prefix step {s}: set {c.name!r} count {cnt} > {c.bound}")
        if np.any(np.abs(w_next - sol.w[s]) > atol):
            problems.append(f"w({s + 1}) disagrees with the dynamics")
        w = w_next
    start = np.zeros(g.n_nodes)
    for c, a in zip(sol.cycles, sol.alphas):
        if np.any(np.asarray(a) < -atol):
            problems.append("negative assignment")
        np.add.at(start, np.asarray(c.states), np.asarray(a, dtype=float))
    if np.any(np.abs(start - w) > atol):
        problems.append("suffix does not start from w(T)")
    for c in instance.constraints:
        if not sol.cycles:
            continue
        peak = float(suffix_peak(sol.cycles, sol.alphas, c, row_cap))
        if peak > c.bound + relax + atol:
            problems.append(f"suffix: set {c.name!r} joint count {peak} > {c.bound}")
    return problems


# ---------------------------------------------------------------- scaling

def scale_instance(instance: ProblemInstance, S: int) -> ProblemInstance:
    """Divide the initial histogram and all bounds by a common divisor ``S``."""
    if int(S) != S or S < 1:
        raise DivisibilityError("the scaling divisor must be a positive integer")
    S = int(S)
    w0 = np.asarray(instance.w0)
    if np.any(w0 % S):
        raise DivisibilityError(f"{S} does not divide the initial histogram")
    for c in instance.constraints:
        if c.bound % S:
            raise DivisibilityError(f"{S} does not divide bound {c.bound} of {c.name!r}")
    cons = [c.with_bound(c.bound // S if float(c.bound).is_integer() else c.bound / S)
            for c in instance.constraints]
    return replace(instance, w0=w0 // S, constraints=cons, scale=instance.scale * S)


def scale_joint(joint: Sequence[JointConstraint], S: int) -> list[JointConstraint]:
    out = []
    for jc in joint:
        if jc.bound % S:
            raise DivisibilityError(f"{S} does not divide joint bound {jc.bound}")
        out.append(JointConstraint(jc.masks, jc.bound // S, jc.name))
    return out


def unscale_point(lp_scaled: LinearProgram, x, S: int) -> np.ndarray:
    """A point of the scaled program mapped to the unscaled program."""
    return np.asarray(x) * S


# ---------------------------------------------------------------- completeness

def completeness_bounds(n_states: int, N: int, diam: int, eps: float) -> dict:
    """Horizon and cycle-length bounds beyond which infeasibility is conclusive."""
    t_max = math.comb(n_states + N - 1, N)
    return {
        "prefix_horizon": t_max,
        "cycle_length": n_states * t_max,
        "relaxed_horizon": (diam ** 2 + 1) * N / eps if eps > 0 else math.inf,
    }


@dataclass
class Verdict:
    label: str
    reason: str

    def __str__(self):
        return f"{self.label}: {self.reason}"


def infeasibility_verdict(instance: ProblemInstance, result) -> Verdict:
    """Interpret a solve outcome for the instance it came from."""
    status = getattr(result, "status", result)
    if status == "feasible":
        kind = "integer" if instance.exact else "relaxed"
        return Verdict("solution", f"{kind} program feasible")

    def conclude(reason):
        if instance.contracted:
            return Verdict("no continuous solution", reason + "; constraints were contracted")
        return Verdict("no discrete solution", reason)

    pruned = prune_zero_count(instance.graph, instance.constraints)
    live = pruned.valid.any(axis=1)
    if np.any((np.asarray(instance.w0) > 0) & ~live):
        return conclude("some initial states have no infinite run that avoids the zero-bound sets")
    if status != "infeasible":
        return Verdict("inconclusive", f"solver returned {status}")
    n, N = instance.n_nodes, int(round(float(instance.N)))
    cov = instance.cycle_coverage
    if instance.exact:
        b = completeness_bounds(n, N, 0, 1.0)
        if cov and cov[0] == "all" and cov[1] >= b["cycle_length"] and instance.T >= b["prefix_horizon"]:
            return conclude("integer program infeasible at the converse horizon and cycle length")
        return Verdict("inconclusive", "horizon or cycle set below the converse bounds")
    if instance.relax_eps > 0 and cov and cov[0] in ("simple", "all") and cov[1] >= n:
        comps = [c for c in scc(pruned) if not c.trivial]
        if not comps:
            return Verdict("inconclusive", "no cyclic component")
        diam = max(diameter(pruned, c) for c in comps)
        b = completeness_bounds(n, N, diam, instance.relax_eps)
        if instance.T >= b["relaxed_horizon"]:
            return conclude("relaxed program infeasible with all simple cycles at the relaxed horizon")
    return Verdict("inconclusive", "horizon or cycle set below the converse bounds")
