"""Labeled digraph view of an abstraction: components, periods, pruning, cycles."""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EnumerationOverflow, GraphError

DEFAULT_ENUM_CAP = 1_000_000


class LabeledDigraph:
    """Deterministic labeled digraph stored as a successor table.

    ``succ[q, m]`` is the target of action ``m`` at node ``q`` or ``-1``
    when the action is unavailable.
    """

    def __init__(self, succ):
        succ = np.array(succ, dtype=np.int64)
        if succ.ndim != 2:
            raise GraphError("successor table must be two-dimensional")
        if np.any(succ < -1) or np.any(succ >= succ.shape[0]):
            raise GraphError("successor index out of range")
        succ.setflags(write=False)
        self.succ = succ

    @classmethod
    def from_abstraction(cls, abstraction) -> "LabeledDigraph":
        return cls(abstraction.succ)

    @classmethod
    def from_edges(cls, n_nodes: int, n_modes: int, edges: Iterable[tuple[int, int, int]]) -> "LabeledDigraph":
        succ = np.full((n_nodes, n_modes), -1, dtype=np.int64)
        for u, m, v in edges:
            if succ[u, m] not in (-1, v):
                raise GraphError(f"action {m} at node {u} has two successors")
            succ[u, m] = v
        return cls(succ)

    @property
    def n_nodes(self) -> int:
        return self.succ.shape[0]

    @property
    def n_modes(self) -> int:
        return self.succ.shape[1]

    @property
    def valid(self) -> np.ndarray:
        """Mask of available (node, mode) actions."""
        return self.succ >= 0

    def live_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.valid.any(axis=1))

    def edges(self) -> list[tuple[int, int, int]]:
        q, m = np.nonzero(self.valid)
        return [(int(a), int(b), int(self.succ[a, b])) for a, b in zip(q, m)]

    def adjacency(self) -> csr_matrix:
        """Boolean node adjacency with parallel actions merged."""
        q, m = np.nonzero(self.valid)
        v = self.succ[q, m]
        a = csr_matrix((np.ones(len(q), dtype=np.int8), (q, v)), shape=(self.n_nodes,) * 2)
        a.sum_duplicates()
        a.data[:] = 1
        return a

    def successors(self, q: int) -> list[int]:
        return sorted({int(v) for v in self.succ[q] if v >= 0})

    def restrict(self, nodes) -> "LabeledDigraph":
        """Keep only actions between ``nodes``; indices are unchanged."""
        keep = np.zeros(self.n_nodes, dtype=bool)
        keep[np.asarray(list(nodes), dtype=np.int64)] = True
        succ = self.succ.copy()
        bad = ~keep[:, None] | ~keep[np.maximum(succ, 0)] | (succ < 0)
        succ[bad] = -1
        return LabeledDigraph(succ)

    def __eq__(self, other):
        return isinstance(other, LabeledDigraph) and np.array_equal(self.succ, other.succ)

    def __repr__(self):
        return f"LabeledDigraph(n_nodes={self.n_nodes}, n_modes={self.n_modes}, n_edges={int(self.valid.sum())})"


@dataclass(frozen=True)
class Component:
    nodes: tuple[int, ...]
    trivial: bool

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True, order=True)
class Cycle:
    """Closed walk of (state, mode) pairs in its lexicographically smallest rotation."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(q), int(m)) for q, m in self.pairs)
        if not pairs:
            raise GraphError("a cycle needs at least one pair")
        object.__setattr__(self, "pairs", min(pairs[i:] + pairs[:i] for i in range(len(pairs))))

    def __len__(self):
        return len(self.pairs)

    @property
    def states(self) -> list[int]:
        return [q for q, _ in self.pairs]

    @property
    def modes(self) -> list[int]:
        return [m for _, m in self.pairs]

    def is_closed_in(self, g: LabeledDigraph) -> bool:
        n = len(self.pairs)
        return all(g.succ[q, m] == self.pairs[(i + 1) % n][0] for i, (q, m) in enumerate(self.pairs))

    def is_simple(self) -> bool:
        return len(set(self.states)) == len(self.pairs)

    def to_json(self) -> list:
        return [list(p) for p in self.pairs]

    @classmethod
    def from_json(cls, data) -> "Cycle":
        return cls(tuple(tuple(p) for p in data))


def scc(g: LabeledDigraph) -> list[Component]:
    """Strongly connected components ordered by smallest member."""
    _, labels = connected_components(g.adjacency(), directed=True, connection="strong")
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(node)
    comps = []
    for nodes in groups.values():
        trivial = len(nodes) == 1 and not np.any(g.succ[nodes[0]] == nodes[0])
        comps.append(Component(tuple(nodes), trivial))
    comps.sort(key=lambda c: c.nodes[0])
    return comps


def _as_nodes(component) -> list[int]:
    if isinstance(component, Component):
        return list(component.nodes)
    return sorted(int(v) for v in component)


def _bfs_levels(g: LabeledDigraph, nodes: list[int], anchor: int) -> dict[int, int]:
    inside = set(nodes)
    level = {anchor: 0}
    queue = deque([anchor])
    while queue:
        u = queue.popleft()
        for v in g.successors(u):
            if v in inside and v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    return level


def _check_component(g: LabeledDigraph, nodes: list[int]) -> None:
    if not nodes:
        raise GraphError("empty component")
    sub = g.restrict(nodes)
    if len(nodes) == 1:
        if not np.any(sub.succ[nodes[0]] == nodes[0]):
            raise GraphError("period is undefined on a trivial component")
        return
    _, labels = connected_components(sub.adjacency(), directed=True, connection="strong")
    if len(set(labels[nodes].tolist())) != 1:
        raise GraphError("component is not strongly connected")


def period(g: LabeledDigraph, component) -> int:
    """Gcd of cycle lengths in a nontrivial strongly connected component."""
    nodes = _as_nodes(component)
    _check_component(g, nodes)
    level = _bfs_levels(g.restrict(nodes), nodes, nodes[0])
    p = 0
    for u, _, v in g.restrict(nodes).edges():
        p = math.gcd(p, abs(level[u] + 1 - level[v]))
    return p


def periodic_classes(g: LabeledDigraph, component) -> list[list[int]]:
    """Classes ``D_0..D_{P-1}`` with every edge going from ``D_p`` to ``D_{p+1 mod P}``.

    The smallest node of the component lies in ``D_0``.
    """
    nodes = _as_nodes(component)
    p = period(g, nodes)
    level = _bfs_levels(g.restrict(nodes), nodes, nodes[0])
    classes = [[] for _ in range(p)]
    for v in nodes:
        classes[level[v] % p].append(v)
    return classes


def is_aperiodic(g: LabeledDigraph, component=None) -> bool:
    nodes = _as_nodes(component) if component is not None else list(range(g.n_nodes))
    return period(g, nodes) == 1


def diameter(g: LabeledDigraph, nodes=None) -> int:
    """Longest shortest-path distance between ordered node pairs."""
    nodes = list(range(g.n_nodes)) if nodes is None else _as_nodes(nodes)
    sub = g.restrict(nodes)
    best = 0
    for s in nodes:
        level = _bfs_levels(sub, nodes, s)
        if len(level) != len(nodes):
            raise GraphError("diameter needs a strongly connected graph")
        best = max(best, max(level.values()))
    return best


def prune_zero_count(g: LabeledDigraph, constraints: Sequence) -> LabeledDigraph:
    """Remove actions forbidden by zero-bound sets, then nodes without actions, to a fixpoint."""
    succ = g.succ.copy()
    for c in constraints:
        if c.bound == 0:
            succ[np.asarray(c.mask, dtype=bool)] = -1
    preds: list[list[tuple[int, int]]] = [[] for _ in range(g.n_nodes)]
    for q, m in zip(*np.nonzero(succ >= 0)):
        preds[succ[q, m]].append((int(q), int(m)))
    n_actions = (succ >= 0).sum(axis=1)
    queue = deque(int(q) for q in np.flatnonzero(n_actions == 0))
    dead = np.zeros(g.n_nodes, dtype=bool)
    while queue:
        v = queue.popleft()
        if dead[v]:
            continue
        dead[v] = True
        for q, m in preds[v]:
            if succ[q, m] == v:
                succ[q, m] = -1
                n_actions[q] -= 1
                if n_actions[q] == 0:
                    queue.append(q)
    return LabeledDigraph(succ)


def _dist_to(g: LabeledDigraph, target: int, allowed: np.ndarray, preds) -> dict[int, int]:
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if allowed[u] and u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def enumerate_simple_cycles(g: LabeledDigraph, max_len: int, cap: int = DEFAULT_ENUM_CAP) -> list[Cycle]:
    """All simple cycles of length at most ``max_len``, parallel actions kept distinct.

    Backtracking from each start node over larger-indexed nodes, pruned by
    the distance back to the start.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    preds: list[set[int]] = [set() for _ in range(g.n_nodes)]
    for u, _, v in g.edges():
        preds[v].add(u)
    out: list[Cycle] = []
    for s in range(g.n_nodes):
        allowed = np.zeros(g.n_nodes, dtype=bool)
        allowed[s:] = True
        dist = _dist_to(g, s, allowed, preds)
        on_path = {s}
        path: list[tuple[int, int]] = []

        def extend(u: int) -> None:
            for m in range(g.n_modes):
                v = int(g.succ[u, m])
                if v < 0:
                    continue
                if v == s:
                    if len(path) + 1 > max_len:
                        continue
                    out.append(Cycle(tuple(path + [(u, m)])))
                    if len(out) > cap:
                        raise EnumerationOverflow(f"more than {cap} simple cycles")
                    continue
                if v in on_path or v not in dist:
                    continue
                if len(path) + 1 + dist[v] > max_len:
                    continue
                on_path.add(v)
                path.append((u, m))
                extend(v)
                path.pop()
                on_path.discard(v)

        extend(s)
    out.sort(key=lambda c: (len(c), c.pairs))
    return out


@dataclass
class SampleResult:
    cycles: list[Cycle]
    complete: bool
    attempts: int


def _visits(cycle: Cycle, mask: np.ndarray) -> bool:
    return any(mask[q, m] for q, m in cycle.pairs)


def sample_cycles(g: LabeledDigraph, count: int, visit_sets: Sequence = (), *,
                  mode_fractions: Optional[Sequence[float]] = None, biased_mode: int = 1,
                  seed: int = 0, budget: Optional[int] = None,
                  start_nodes: Optional[Sequence[int]] = None) -> SampleResult:
    """Distinct cycles found by seeded random walks truncated at the first revisit.

    A cycle is kept only if it meets every mask in ``visit_sets``. With
    ``mode_fractions`` the walk of attempt ``k`` takes ``biased_mode`` with
    probability ``mode_fractions[k % len]`` whenever it has a choice.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    budget = 200 * count if budget is None else budget
    masks = [np.asarray(getattr(v, "mask", v), dtype=bool) for v in visit_sets]
    starts = np.asarray(start_nodes if start_nodes is not None else g.live_nodes(), dtype=np.int64)
    found: set[Cycle] = set()
    attempts = 0
    while len(found) < count and attempts < budget and len(starts):
        frac = None if mode_fractions is None or len(mode_fractions) == 0 else float(mode_fractions[attempts % len(mode_fractions)])
        attempts += 1
        u = int(starts[rng.integers(len(starts))])
        pos = {u: 0}
        path: list[tuple[int, int]] = []
        while True:
            acts = np.flatnonzero(g.succ[u] >= 0)
            if len(acts) == 0:
                path = []
                break
            if frac is not None and biased_mode in acts and len(acts) > 1:
                if rng.random() < frac:
                    m = biased_mode
                else:
                    others = acts[acts != biased_mode]
                    m = int(others[rng.integers(len(others))])
            else:
                m = int(acts[rng.integers(len(acts))])
            path.append((u, m))
            u = int(g.succ[u, m])
            if u in pos:
                path = path[pos[u]:]
                break
            pos[u] = len(path)
        if not path:
            continue
        cyc = Cycle(tuple(path))
        if all(_visits(cyc, mk) for mk in masks):
            found.add(cyc)
    complete = len(found) >= count
    if not complete:
        warnings.warn(f"cycle sampling found {len(found)} of {count} cycles in {attempts} walks",
                      stacklevel=2)
    return SampleResult(sorted(found, key=lambda c: (len(c), c.pairs)), complete, attempts)


def reachable(g: LabeledDigraph, sources) -> np.ndarray:
    """Mask of nodes reachable from ``sources`` (inclusive)."""
    seen = np.zeros(g.n_nodes, dtype=bool)
    queue = deque(int(s) for s in sources)
    for s in queue:
        seen[s] = True
    while queue:
        u = queue.popleft()
        for v in g.succ[u]:
            if v >= 0 and not seen[v]:
                seen[v] = True
                queue.append(int(v))
    return seen
