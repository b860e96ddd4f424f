"""Turning aggregate solutions into per-subsystem switching signals.

The centralized protocol splits the subsystems present at each node into
mode groups whose sizes come from the aggregate solution. Within a node,
subsystems are matched to modes in ascending id order against ascending
mode index, so every run is reproducible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ProtocolViolation
from .graph import Cycle, LabeledDigraph
from .synthesis import PrefixSuffixSolution


def suffix_counts(solution: PrefixSuffixSolution, k: int, n_nodes: int, n_modes: int) -> np.ndarray:
    """(node, mode) group sizes ``k`` steps into the suffix."""
    out = np.zeros((n_nodes, n_modes), dtype=np.int64)
    for c, a in zip(solution.cycles, solution.alphas):
        a = np.roll(np.asarray(a, dtype=np.int64), k)
        np.add.at(out, (np.asarray(c.states), np.asarray(c.modes)), a)
    return out


def _histogram(states, n_nodes):
    return np.bincount(np.asarray(states, dtype=np.int64), minlength=n_nodes)


def assign_inputs(states, solution: PrefixSuffixSolution, s: int, graph: LabeledDigraph) -> np.ndarray:
    """Modes for every subsystem at time ``s``."""
    states = np.asarray(states, dtype=np.int64)
    n, m = graph.n_nodes, graph.n_modes
    if s < solution.T:
        groups = np.rint(solution.r[s]).astype(np.int64)
    else:
        groups = suffix_counts(solution, s - solution.T, n, m)
    hist = _histogram(states, n)
    if not np.array_equal(groups.sum(axis=1), hist):
        bad = np.flatnonzero(groups.sum(axis=1) != hist)[:5]
        raise ProtocolViolation(f"fleet histogram disagrees with the solution at time {s}, nodes {bad.tolist()}")
    if np.any(groups[~graph.valid] != 0):
        raise ProtocolViolation(f"solution uses an unavailable action at time {s}")
    modes = np.empty(len(states), dtype=np.int64)
    order = np.argsort(states, kind="stable")
    sorted_states = states[order]
    bounds = np.searchsorted(sorted_states, np.arange(n + 1))
    for q in np.flatnonzero(hist):
        ids = order[bounds[q]:bounds[q + 1]]
        modes[ids] = np.repeat(np.arange(m), groups[q])
    return modes


def _berths(solution: PrefixSuffixSolution, states_T, n_modes: int) -> list[tuple[int, int]]:
    """Cycle berth ``(j, i)`` of every subsystem at time ``T``.

    Berths at a node are ordered by (mode, cycle, position) and handed out
    in ascending subsystem id, which agrees with :func:`assign_inputs` at ``T``.
    """
    slots: dict[int, list[tuple[int, int, int]]] = {}
    for j, (c, a) in enumerate(zip(solution.cycles, solution.alphas)):
        for i, (q, mu) in enumerate(c.pairs):
            slots.setdefault(q, []).extend([(mu, j, i)] * int(round(float(a[i]))))
    for v in slots.values():
        v.sort()
    taken: dict[int, int] = {}
    out = []
    for n, q in enumerate(np.asarray(states_T, dtype=np.int64).tolist()):
        k = taken.get(q, 0)
        if k >= len(slots.get(q, [])):
            raise ProtocolViolation(f"no free cycle berth at node {q} for subsystem {n}")
        taken[q] = k + 1
        out.append(slots[q][k][1:])
    return out


def run_protocol(states0, solution: PrefixSuffixSolution, graph: LabeledDigraph, horizon: int):
    """Closed-loop run of the protocol; returns ``(states[H+1, N], modes[H, N])``.

    In the suffix every subsystem keeps the berth it took at ``T``; the group
    sizes are checked against :func:`assign_inputs` at every step.
    """
    xi = np.asarray(states0, dtype=np.int64).copy()
    states = [xi.copy()]
    modes = []
    berths = None
    m = graph.n_modes
    for s in range(horizon):
        mu = assign_inputs(xi, solution, s, graph)
        if s >= solution.T:
            if berths is None:
                berths = _berths(solution, xi, m)
            k = s - solution.T
            planned = np.array([solution.cycles[j].modes[(i + k) % len(solution.cycles[j])]
                                for j, i in berths], dtype=np.int64)
            if not np.array_equal(np.sort(xi * m + planned), np.sort(xi * m + mu)):
                raise ProtocolViolation(f"berths disagree with the suffix group sizes at time {s}")
            mu = planned
        xi = graph.succ[xi, mu]
        if np.any(xi < 0):
            raise ProtocolViolation(f"a subsystem left the graph at time {s}")
        states.append(xi.copy())
        modes.append(mu)
    return np.array(states), np.array(modes, dtype=np.int64).reshape(horizon, len(xi))


@dataclass(frozen=True)
class Plan:
    """Eventually periodic mode word of one subsystem."""

    subsystem: int
    prefix: tuple
    cycle_id: int
    cycle: Cycle
    offset: int

    def mode_at(self, s: int) -> int:
        T = len(self.prefix)
        if s < T:
            return self.prefix[s]
        return self.cycle.modes[(self.offset + s - T) % len(self.cycle)]

    def berth_at(self, s: int) -> int:
        """Cycle position occupied at time ``s >= T``."""
        return (self.offset + s - len(self.prefix)) % len(self.cycle)


def open_loop_plans(solution: PrefixSuffixSolution, states0, graph: LabeledDigraph) -> list[Plan]:
    """Run the protocol through the prefix, then pin every subsystem to a cycle berth."""
    states, modes = run_protocol(states0, solution, graph, solution.T)
    berths = _berths(solution, states[-1], graph.n_modes)
    return [Plan(n, tuple(int(v) for v in modes[:, n]), j, solution.cycles[j], i)
            for n, (j, i) in enumerate(berths)]


def plan_modes(plans: Sequence[Plan], horizon: int) -> np.ndarray:
    """Mode of every plan at every time, shape ``(H, N)``."""
    out = np.empty((horizon, len(plans)), dtype=np.int64)
    if not plans:
        return out
    T = len(plans[0].prefix)
    if any(len(p.prefix) != T for p in plans):
        raise ValueError("plans must share the prefix length")
    head = min(T, horizon)
    if head:
        out[:head] = np.array([p.prefix[:head] for p in plans], dtype=np.int64).T
    if horizon > T:
        k = np.arange(horizon - T)[:, None]
        groups: dict[int, list[int]] = {}
        for n, p in enumerate(plans):
            groups.setdefault(p.cycle_id, []).append(n)
        for idx in groups.values():
            c = plans[idx[0]].cycle
            cm = np.asarray(c.modes, dtype=np.int64)
            off = np.array([plans[n].offset for n in idx])
            out[T:, idx] = cm[(off[None, :] + k) % len(c)]
    return out


def replay_plans(plans: Sequence[Plan], states0, graph: LabeledDigraph, horizon: int):
    """Apply each plan independently; returns ``(states[H+1, N], modes[H, N])``."""
    modes = plan_modes(plans, horizon)
    xi = np.asarray(states0, dtype=np.int64).copy()
    states = [xi.copy()]
    for s in range(horizon):
        nxt = graph.succ[np.maximum(xi, 0), modes[s]]
        xi = np.where(xi < 0, -1, nxt)
        states.append(xi.copy())
    return np.array(states), modes


@dataclass
class DiscreteReport:
    counts: np.ndarray          # (H, L)
    bounds: np.ndarray          # (L,)
    max_counts: np.ndarray
    first_violation: Optional[tuple]
    left_graph: bool

    @property
    def ok(self) -> bool:
        return self.first_violation is None and not self.left_graph


def count_pairs(states, modes, constraints) -> np.ndarray:
    """Per-step counts ``(H, L)`` of subsystems whose (state, mode) lies in each set."""
    states = np.asarray(states)
    modes = np.asarray(modes)
    H = modes.shape[0]
    out = np.zeros((H, len(constraints)), dtype=np.int64)
    for s in range(H):
        xi, mu = states[s], modes[s]
        ok = xi >= 0
        for l, c in enumerate(constraints):
            out[s, l] = int(np.sum(c.mask[xi[ok], mu[ok]]))
    return out


def verify_discrete(states0, plans: Sequence[Plan], constraints, graph: LabeledDigraph, horizon: int) -> DiscreteReport:
    """Step the discrete fleet under the plans and check every counting set."""
    states, modes = replay_plans(plans, states0, graph, horizon)
    counts = count_pairs(states[:-1], modes, constraints)
    bounds = np.array([c.bound for c in constraints], dtype=float)
    first = None
    if len(constraints):
        viol = counts > bounds[None, :] + 1e-9
        if viol.any():
            s, l = np.argwhere(viol)[0]
            first = (int(s), int(l))
    left = bool(np.any(states < 0))
    max_counts = counts.max(axis=0) if horizon else np.zeros(len(constraints), dtype=np.int64)
    return DiscreteReport(counts, bounds, max_counts, first, left)


def write_plans_csv(plans: Sequence[Plan], path, mode_ids: Optional[Sequence] = None) -> Path:
    path = Path(path)
    label = (lambda m: str(mode_ids[m])) if mode_ids is not None else str
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subsystem", "prefix", "cycle", "offset"])
        for p in plans:
            w.writerow([p.subsystem, " ".join(label(m) for m in p.prefix), p.cycle_id, p.offset])
    return path
