"""Continuous fleet simulation driven by open-loop plans."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .abstraction import Abstraction
from .control import plan_modes
from .model import SwitchedModel, flow


def draw_disturbances(model: SwitchedModel, N: int, seed: int = 0) -> np.ndarray:
    """Constant per-subsystem disturbances, uniform within every mode's bound."""
    bound = min(m.disturbance_bound for m in model.modes)
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=(N, model.n_x))


@dataclass
class FleetTrace:
    """Samples of the continuous fleet and of its abstract counterpart."""

    tau: float
    x: np.ndarray           # (H+1, N, n_x)
    modes: np.ndarray       # (H, N)
    abstract: np.ndarray    # (H+1, N) grid states, -1 once off the graph
    deviation: np.ndarray   # (H+1,) max over subsystems of the sup-norm gap
    outside: np.ndarray     # (H+1,) subsystems farther than the margin from the domain

    @property
    def horizon(self) -> int:
        return self.modes.shape[0]

    @property
    def N(self) -> int:
        return self.x.shape[1]


def simulate_fleet(model: SwitchedModel, plans, x0, disturbances, horizon: int, tau: float,
                   abstraction: Abstraction, margin: Optional[float] = None) -> FleetTrace:
    """Integrate every subsystem under its plan for ``horizon`` samples.

    The abstract trace starts at the grid cell of each initial state and
    follows the abstraction's transitions under the same modes.
    ``outside`` counts subsystems more than ``margin`` (default: the
    abstraction's epsilon, else 0) outside the domain.
    """
    x = np.array(x0, dtype=float).reshape(len(plans), model.n_x)
    d = np.zeros_like(x) if disturbances is None else np.asarray(disturbances, dtype=float).reshape(x.shape)
    grid = abstraction.grid
    pts = grid.points()
    margin = (abstraction.epsilon or 0.0) if margin is None else margin
    xi = grid.state_of(x)
    lo, hi = np.asarray(model.domain.lo), np.asarray(model.domain.hi)

    def gap(x, xi):
        dev = np.full(len(xi), np.inf)
        ok = xi >= 0
        dev[ok] = np.max(np.abs(x[ok] - pts[xi[ok]]), axis=-1) if model.n_x else 0.0
        out = np.any((x < lo - margin) | (x > hi + margin), axis=-1)
        return (float(dev.max()) if len(dev) else 0.0), int(out.sum())

    xs, ab, dv, ot, ms = [x.copy()], [xi.copy()], [], [], []
    g0, o0 = gap(x, xi)
    dv.append(g0)
    ot.append(o0)
    all_modes = plan_modes(plans, horizon)
    for s in range(horizon):
        mu = all_modes[s]
        nxt = np.empty_like(x)
        for k, mode in enumerate(model.modes):
            sel = mu == k
            if sel.any():
                nxt[sel] = flow(mode, x[sel], tau, d[sel])
        ok = xi >= 0
        xi_next = np.full_like(xi, -1)
        xi_next[ok] = abstraction.succ[xi[ok], mu[ok]]
        x, xi = nxt, xi_next
        g, o = gap(x, xi)
        xs.append(x.copy())
        ab.append(xi.copy())
        dv.append(g)
        ot.append(o)
        ms.append(mu)
    return FleetTrace(tau, np.array(xs), np.array(ms, dtype=np.int64).reshape(horizon, len(plans)),
                      np.array(ab), np.array(dv), np.array(ot))


@dataclass
class ContinuousReport:
    counts: np.ndarray      # (H, L)
    bounds: np.ndarray
    max_counts: np.ndarray
    first_violation: Optional[tuple]
    max_deviation: float

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def continuous_counts(trace: FleetTrace, sets: Sequence) -> np.ndarray:
    """Per-sample counts ``(H, L)`` of the continuous fleet in each set."""
    H = trace.horizon
    out = np.zeros((H, len(sets)), dtype=np.int64)
    for l, cs in enumerate(sets):
        out[:, l] = cs.contains(trace.x[:H], trace.modes).sum(axis=1)
    return out


def verify_continuous(trace: FleetTrace, sets: Sequence, bounds=None) -> ContinuousReport:
    """Check the original (unexpanded) counting sets at every sample."""
    counts = continuous_counts(trace, sets)
    bounds = np.array([c.bound for c in sets] if bounds is None else bounds, dtype=float)
    first = None
    if len(sets):
        viol = counts > bounds[None, :] + 1e-9
        if viol.any():
            s, l = np.argwhere(viol)[0]
            first = (int(s), int(l))
    mx = counts.max(axis=0) if trace.horizon else np.zeros(len(sets), dtype=np.int64)
    return ContinuousReport(counts, bounds, mx, first, float(trace.deviation.max()))


def density_histogram(trace: FleetTrace, bins, axis: int = 0) -> np.ndarray:
    """Occupancy ``(H+1, len(bins)-1)`` of the state coordinate ``axis``.

    States on or beyond the outer edges are clipped into the first and last
    bins so every row sums to N.
    """
    bins = np.asarray(bins, dtype=float)
    v = trace.x[:, :, axis]
    idx = np.clip(np.searchsorted(bins, v, side="right") - 1, 0, len(bins) - 2)
    out = np.zeros((v.shape[0], len(bins) - 1), dtype=np.int64)
    for s in range(v.shape[0]):
        out[s] = np.bincount(idx[s], minlength=len(bins) - 1)
    return out


def write_counts_csv(path, counts, bounds, names: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    names = names or [str(l) for l in range(counts.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "constraint", "count", "bound"])
        for s in range(counts.shape[0]):
            for l in range(counts.shape[1]):
                w.writerow([s, names[l], int(counts[s, l]), _num(bounds[l])])
    return path


def write_density_csv(path, hist, bins) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "bin_lo", "bin_hi", "count"])
        for s in range(hist.shape[0]):
            for b in range(hist.shape[1]):
                w.writerow([s, _num(bins[b]), _num(bins[b + 1]), int(hist[s, b])])
    return path


def write_deviations_csv(path, deviation) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "max_deviation"])
        for s, v in enumerate(deviation):
            w.writerow([s, repr(float(v))])
    return path


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)
