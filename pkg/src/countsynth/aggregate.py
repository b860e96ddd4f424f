"""Histogram dynamics, cycle assignments and their counts, and histogram steering.

Aggregate states ``w`` are vectors over graph nodes; aggregate inputs
``r`` are ``(n_nodes, n_modes)`` arrays whose row sums equal ``w``. An
assignment is a weight vector over the positions of a cycle and moves
forward one position per step.
"""
from __future__ import annotations

import math
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .errors import GraphError, LcmCapExceeded, ParityError
from .graph import Cycle, LabeledDigraph, periodic_classes, _as_nodes

ATOL = 1e-9
DEFAULT_ROW_CAP = 100_000


def _is_integral(a) -> bool:
    a = np.asarray(a)
    return a.dtype.kind in "iu" or bool(np.all(a == np.round(a)))


def check_input(w, r, g: LabeledDigraph, atol: float = ATOL) -> None:
    """Raise ValueError unless ``r`` is an admissible input for ``w``."""
    w = np.asarray(w)
    r = np.asarray(r)
    if r.shape != g.succ.shape or w.shape != (g.n_nodes,):
        raise ValueError("shape mismatch between w, r and the graph")
    exact = _is_integral(w) and _is_integral(r)
    tol = 0 if exact else atol
    if np.any(r < -tol):
        raise ValueError("negative aggregate input")
    if np.any(np.abs(r[~g.valid]) > tol):
        raise ValueError("input assigned to an unavailable action")
    if np.any(np.abs(r.sum(axis=1) - w) > tol):
        raise ValueError("input does not split the node masses")


def step(w, r, g: LabeledDigraph, atol: float = ATOL) -> np.ndarray:
    """One step of the histogram dynamics."""
    check_input(w, r, g, atol)
    r = np.asarray(r)
    q, m = np.nonzero(g.valid)
    out = np.zeros(g.n_nodes, dtype=r.dtype if r.dtype.kind in "iu" else float)
    np.add.at(out, g.succ[q, m], r[q, m])
    return out


def circulate(alpha, s: int) -> np.ndarray:
    """Assignment after ``s`` steps: entry ``i`` is ``alpha[(i - s) mod |C|]``."""
    if s < 0:
        raise ValueError("shift must be nonnegative")
    return np.roll(np.asarray(alpha), s)


def membership(cycle: Cycle, X) -> np.ndarray:
    """0/1 vector marking the cycle positions whose pair lies in ``X``.

    ``X`` may be a counting set (anything with ``mask``), a boolean mask,
    or a collection of (state, mode) pairs.
    """
    mask = getattr(X, "mask", X)
    if isinstance(mask, np.ndarray) and mask.ndim == 2:
        return np.array([int(mask[q, m]) for q, m in cycle.pairs], dtype=np.int64)
    pairs = {tuple(p) for p in X}
    return np.array([int(p in pairs) for p in cycle.pairs], dtype=np.int64)


def x_count(cycle: Cycle, alpha, s: int, X):
    """Mass of the circulated assignment lying in ``X`` at time ``s``."""
    return np.dot(circulate(alpha, s), membership(cycle, X))


def circulant_from_membership(b) -> np.ndarray:
    n = len(b)
    idx = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n
    return np.asarray(b)[idx]


def circulant_matrix(cycle: Cycle, X) -> np.ndarray:
    """Binary matrix whose row ``s`` picks the assignment entries counted at time ``s``."""
    return circulant_from_membership(membership(cycle, X))


def maxcnt(cycle: Cycle, alpha, X):
    return np.max(circulant_matrix(cycle, X) @ np.asarray(alpha))


def _lcm(values) -> int:
    return reduce(math.lcm, (int(v) for v in values), 1)


def joint_counts(cycles: Sequence[Cycle], assignments, X, row_cap: int = DEFAULT_ROW_CAP) -> np.ndarray:
    """Total X-count at every time step of one joint period."""
    if len(cycles) != len(assignments):
        raise ValueError("cycles and assignments differ in number")
    if not cycles:
        return np.zeros(1)
    L = _lcm(len(c) for c in cycles)
    if L > row_cap:
        raise LcmCapExceeded(f"lcm {L} exceeds the row cap {row_cap}; use conservative counting")
    total = 0
    for c, a in zip(cycles, assignments):
        total = total + np.tile(circulant_matrix(c, X) @ np.asarray(a), L // len(c))
    return total


def joint_maxcnt(cycles: Sequence[Cycle], assignments, X, row_cap: int = DEFAULT_ROW_CAP):
    return np.max(joint_counts(cycles, assignments, X, row_cap))


def joint_count_matrix(cycles: Sequence[Cycle], X, row_cap: int = DEFAULT_ROW_CAP) -> csr_matrix:
    """Sparse ``[1 (x) B_1, ..., 1 (x) B_J]`` acting on the stacked assignments."""
    L = _lcm(len(c) for c in cycles)
    if L > row_cap:
        raise LcmCapExceeded(f"lcm {L} exceeds the row cap {row_cap}")
    rows, cols = [], []
    offset = 0
    for c in cycles:
        n = len(c)
        hits = np.flatnonzero(membership(c, X))
        t = np.arange(L)
        for i in hits:
            # Row t counts entry j with (j + t) mod n == i.
            rows.append(t)
            cols.append(offset + (i - t) % n)
        offset += n
    if rows:
        rows, cols = np.concatenate(rows), np.concatenate(cols)
    data = np.ones(len(rows), dtype=np.int64)
    return coo_matrix((data, (rows, cols)), shape=(L, offset)).tocsr()


def coprime_partition(lengths) -> list[list[int]]:
    """Group indices so that lengths in different groups are co-prime.

    Groups are the connected components of the relation ``gcd > 1``,
    which is the finest partition with that property. Groups are ordered
    by their first index.
    """
    lengths = [len(v) if isinstance(v, Cycle) else int(v) for v in lengths]
    parent = list(range(len(lengths)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(lengths)):
        for j in range(i + 1, len(lengths)):
            if math.gcd(lengths[i], lengths[j]) > 1:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(lengths)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def length_partition(lengths) -> list[list[int]]:
    """Group indices by equal length, ordered by length."""
    groups: dict[int, list[int]] = {}
    for i, n in enumerate(lengths):
        groups.setdefault(int(n), []).append(i)
    return [groups[k] for k in sorted(groups)]


def partition_rows(lengths, groups) -> int:
    return sum(_lcm(lengths[i] for i in g) for g in groups)


def conservative_joint(cycles: Sequence[Cycle], assignments, X, row_cap: int = DEFAULT_ROW_CAP):
    """Sum over length classes of the joint count of each class; never below the exact value."""
    lengths = [len(c) for c in cycles]
    return sum(joint_maxcnt([cycles[i] for i in g], [assignments[i] for i in g], X, row_cap)
               for g in length_partition(lengths))


def suffix_peak(cycles: Sequence[Cycle], assignments, X, row_cap: int = DEFAULT_ROW_CAP):
    """Upper bound on the joint X-count of circulating assignments.

    Exact when the lcm of the lengths fits ``row_cap``; otherwise summed
    over co-prime groups (still exact) and, failing that, over equal-length
    groups (conservative).
    """
    pairs = [(c, a) for c, a in zip(cycles, assignments) if membership(c, X).any()]
    if not pairs:
        return 0
    cyc = [c for c, _ in pairs]
    ass = [a for _, a in pairs]
    lengths = [len(c) for c in cyc]
    if _lcm(lengths) <= row_cap:
        return joint_maxcnt(cyc, ass, X, row_cap)
    groups = coprime_partition(lengths)
    if all(_lcm(lengths[i] for i in g) <= row_cap for g in groups):
        return sum(joint_maxcnt([cyc[i] for i in g], [ass[i] for i in g], X, row_cap) for g in groups)
    return conservative_joint(cyc, ass, X, row_cap)


def average_assignment(length: int, P: int, totals) -> np.ndarray:
    """Assignment constant on residue classes mod ``P`` with class totals ``totals``."""
    if P < 1 or length % P:
        raise ValueError("P must divide the cycle length")
    totals = np.asarray(totals, dtype=float)
    if totals.shape != (P,) or np.any(totals < 0):
        raise ValueError("need P nonnegative class totals")
    return totals[np.arange(length) % P] / (length // P)


def class_totals(alpha, P: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if len(alpha) % P:
        raise ValueError("P must divide the cycle length")
    return alpha.reshape(-1, P).sum(axis=0)


def _rotation_offset(raw: tuple) -> int:
    n = len(raw)
    best = min(range(n), key=lambda i: raw[i:] + raw[:i])
    return best


def split_cycle_average(cycle: Cycle, alpha, node: int, P: int = 1):
    """Split a cycle at a repeated node and spread its mass over the two pieces.

    Returns ``((C1, a1), (C2, a2))`` where each ``a_k`` is the P-average
    assignment carrying the share ``|C_k|/|C|`` of every residue class.
    """
    pos = [i for i, q in enumerate(cycle.states) if q == node]
    if len(pos) < 2:
        raise GraphError("the cycle does not revisit the node")
    n = len(cycle)
    i1, i2 = pos[0], pos[1]
    raw1 = cycle.pairs[i1:i2]
    raw2 = cycle.pairs[i2:] + cycle.pairs[:i1]
    for raw in (raw1, raw2):
        if len(raw) % P:
            raise ValueError("P must divide both subcycle lengths")
    totals = class_totals(alpha, P)
    out = []
    for raw, start in ((raw1, i1), (raw2, i2)):
        k = len(raw)
        shift = _rotation_offset(raw)
        sub = Cycle(raw)
        share = totals * (k / n)
        # Position i of the canonical subcycle sits at position start+shift+i of the parent.
        cls = (start + shift + np.arange(k)) % P
        out.append((sub, share[cls] / (k // P)))
    return tuple(out)


# ---------------------------------------------------------------- steering

def primitivity_horizon(g: LabeledDigraph, component=None) -> int:
    """Smallest T with every entry of the T-th boolean adjacency power positive."""
    nodes = _as_nodes(component) if component is not None else list(range(g.n_nodes))
    sub = g.restrict(nodes)
    A = sub.adjacency()[nodes][:, nodes].toarray().astype(bool)
    n = len(nodes)
    cap = (n - 1) ** 2 + 1
    M = A.copy()
    for t in range(1, cap + 1):
        if M.all():
            return t
        M = (M.astype(np.int64) @ A.astype(np.int64)) > 0
    raise GraphError("component is not primitive")


def _class_setup(g, component, w_from, w_to):
    nodes = _as_nodes(component)
    classes = periodic_classes(g, nodes)
    P = len(classes)
    label = np.full(g.n_nodes, -1, dtype=np.int64)
    for p, cl in enumerate(classes):
        label[cl] = p
    w_from = np.asarray(w_from)
    w_to = np.asarray(w_to)
    for w in (w_from, w_to):
        if w.shape != (g.n_nodes,):
            raise ValueError("histograms must be indexed by graph node")
        if not _is_integral(w) or np.any(w < 0):
            raise ValueError("steering needs nonnegative integer histograms")
        if np.any(w[label < 0] != 0):
            raise ValueError("histogram has mass outside the component")
    if w_from.sum() != w_to.sum():
        raise ValueError("histograms have different totals")
    c = np.array([w_from[cl].sum() for cl in classes])
    d = np.array([w_to[cl].sum() for cl in classes])
    return nodes, classes, P, label, c, d


def compatible_rotations(g: LabeledDigraph, component, w_from, w_to) -> list[int]:
    """Horizon residues ``k`` mod the period for which class masses can match."""
    _, _, P, _, c, d = _class_setup(g, component, w_from, w_to)
    return [k for k in range(P) if all(d[(p + k) % P] == c[p] for p in range(P))]


def _northwest_corner(supply, demand):
    supply, demand = list(supply), list(demand)
    i = j = 0
    out = []
    while i < len(supply) and j < len(demand):
        x = min(supply[i], demand[j])
        if x > 0:
            out.append((i, j, x))
        supply[i] -= x
        demand[j] -= x
        if supply[i] == 0:
            i += 1
        else:
            j += 1
    return out


def steer(g: LabeledDigraph, component, w_from, w_to, horizon: Optional[int] = None) -> list[np.ndarray]:
    """Integer inputs driving ``w_from`` exactly to ``w_to`` inside a component.

    The horizon is the smallest admissible length for which every
    source-target pair is joined by a walk of exactly that length.
    Passing ``horizon`` fixes it instead.
    """
    nodes, classes, P, label, c, d = _class_setup(g, component, w_from, w_to)
    w_from = np.asarray(w_from, dtype=np.int64)
    w_to = np.asarray(w_to, dtype=np.int64)
    if np.array_equal(w_from, w_to) and horizon in (None, 0):
        return []
    rots = [k for k in range(P) if all(d[(p + k) % P] == c[p] for p in range(P))]
    if horizon is not None:
        rots = [k for k in rots if k == horizon % P]
    if not rots:
        raise ParityError(f"class masses {c.tolist()} cannot be rotated onto {d.tolist()}"
                          + (f" at horizon {horizon}" if horizon is not None else ""),
                          source_sums=c.tolist(), target_sums=d.tolist())
    sub = g.restrict(nodes)
    A = sub.adjacency().astype(np.int64)
    sources = np.flatnonzero(w_from)
    targets = np.flatnonzero(w_to)
    needed = {}
    for k in rots:
        needed[k] = [(u, v) for u in sources for v in targets if label[v] == (label[u] + k) % P]
    cap = P * ((len(nodes) - 1) ** 2 + 1) + P
    reach = csr_matrix((np.ones(len(sources), dtype=np.int64), (np.arange(len(sources)), sources)),
                       shape=(len(sources), g.n_nodes))
    row = {int(u): i for i, u in enumerate(sources)}
    T = None
    for t in range(1, cap + 1):
        reach = (reach @ A)
        reach.data[:] = 1
        if horizon is not None and t < horizon:
            continue
        dense = reach.toarray()
        k = t % P
        if k in needed and all(dense[row[int(u)], v] for u, v in needed[k]):
            T = t
            break
        if horizon is not None:
            break
    if T is None:
        raise GraphError("no common walk length joins the histograms"
                         + (f" at horizon {horizon}" if horizon is not None else ""))
    preds: list[list[tuple[int, int]]] = [[] for _ in range(g.n_nodes)]
    for u, m, v in sub.edges():
        preds[v].append((u, m))
    rs = [np.zeros(g.succ.shape, dtype=np.int64) for _ in range(T)]
    k = T % P
    back_cache: dict[int, list[np.ndarray]] = {}
    for p in range(P):
        src = [int(u) for u in classes[p] if w_from[u] > 0]
        dst = [int(v) for v in classes[(p + k) % P] if w_to[v] > 0]
        plan = _northwest_corner([w_from[u] for u in src], [w_to[v] for v in dst])
        for i, j, amount in plan:
            u, v = src[i], dst[j]
            if v not in back_cache:
                layers = [np.zeros(g.n_nodes, dtype=bool)]
                layers[0][v] = True
                for _ in range(T):
                    nxt = np.zeros(g.n_nodes, dtype=bool)
                    for x in np.flatnonzero(layers[-1]):
                        for y, _ in preds[x]:
                            nxt[y] = True
                    layers.append(nxt)
                back_cache[v] = layers
            layers = back_cache[v]
            x = u
            for s in range(T):
                rem = T - s - 1
                for m in range(g.n_modes):
                    y = sub.succ[x, m]
                    if y >= 0 and layers[rem][y]:
                        break
                else:
                    raise GraphError("routing failed")  # unreachable when T was found
                rs[s][x, m] += amount
                x = int(y)
    return rs
