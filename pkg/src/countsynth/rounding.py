"""Rounding relaxed suffix assignments to integers, with violation bounds."""
from __future__ import annotations

from dataclasses import replace
from typing import Sequence

import numpy as np

from .aggregate import maxcnt, membership
from .errors import NotSupportedError
from .graph import Cycle, LabeledDigraph, period, scc

SNAP = 1e-9


def apportion_weights(weights) -> np.ndarray:
    """Integers summing to the rounded total, each within one of its weight.

    Largest-remainder method; equal remainders go to the lowest index.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < -SNAP):
        raise ValueError("weights must be nonnegative")
    w = np.where(np.abs(w - np.round(w)) <= SNAP, np.round(w), w)
    total = int(round(float(w.sum())))
    base = np.floor(w).astype(np.int64)
    extra = total - int(base.sum())
    rem = w - base
    order = sorted(range(len(w)), key=lambda i: (-rem[i], i))
    for i in order[:max(extra, 0)]:
        base[i] += 1
    return base


def pseudo_periodic(length: int, N: int) -> np.ndarray:
    """Spread ``N`` units over ``length`` positions as evenly as possible.

    Every position gets ``N // length``; the ``N % length`` extra units sit
    at positions ``floor(k * length / (N % length))``.
    """
    if length < 1 or N < 0:
        raise ValueError("need a positive length and a nonnegative total")
    k1, k2 = divmod(int(N), int(length))
    out = np.full(length, k1, dtype=np.int64)
    for k in range(k2):
        out[(k * length) // k2] += 1
    return out


def _require_aperiodic(graph: LabeledDigraph, cycles: Sequence[Cycle]) -> None:
    where = {}
    for comp in scc(graph):
        for v in comp.nodes:
            where[v] = comp
    for c in cycles:
        comp = where[c.states[0]]
        if period(graph, comp) != 1:
            raise NotSupportedError("rounding is only defined on aperiodic components")


def round_suffix(graph: LabeledDigraph, cycles: Sequence[Cycle], alphas) -> list[np.ndarray]:
    """Integer assignments with apportioned totals spread pseudo-periodically."""
    _require_aperiodic(graph, cycles)
    totals = apportion_weights([float(np.sum(a)) for a in alphas])
    return [pseudo_periodic(len(c), int(n)) for c, n in zip(cycles, totals)]


def prefix_instance(instance, cycles: Sequence[Cycle], rounded):
    """Instance whose suffix is pinned to the rounded assignments; only the
    prefix remains to be found."""
    return replace(instance, cycles=list(cycles), exact=True,
                   fixed_alphas=[np.asarray(a, dtype=np.int64) for a in rounded])


def segment_count(cycle: Cycle, X) -> int:
    """Number of maximal circular runs of consecutive cycle positions in ``X``."""
    b = membership(cycle, X)
    if not b.any():
        return 0
    if b.all():
        return 1
    return int(np.sum((b == 1) & (np.roll(b, 1) == 0)))


def violation_bound(cycles: Sequence[Cycle], assignments, X, R, J=None):
    """Bound that the rounded suffix's joint count never exceeds."""
    J = len(cycles) if J is None else J
    return R + J + sum(segment_count(c, X) for c in cycles)


def worst_case_bound(cycle: Cycle, N, X) -> float:
    """Peak count of the rounded assignment never exceeds this, for any ``X``."""
    avg = np.full(len(cycle), N / len(cycle))
    return float(maxcnt(cycle, avg, X)) + len(cycle) / 4
