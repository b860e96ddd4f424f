"""Grid abstraction of a switched model and counting-set transforms.

States of the abstraction are the centres of the side-``eta`` hyperboxes
that meet the domain. A (state, mode) successor is the quantized endpoint
of the nominal flow over one sampling period, or ``-1`` when that endpoint
falls in no grid cell.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CertificateError, DimensionError
from .model import Box, SwitchedModel, flow

FLOOR_NUDGE = 1e-12
CONTRACT_TOL = 1e-9
JSON_FORMAT = "countsynth.abstraction"
JSON_VERSION = 1


def _floor(v):
    return np.floor(np.asarray(v, dtype=float) + FLOOR_NUDGE)


def quantize(x, eta: float) -> np.ndarray:
    """Centre of the grid hyperbox containing ``x``: ``eta*floor(x/eta) + eta/2``."""
    x = np.asarray(x, dtype=float)
    return eta * _floor(x / eta) + eta / 2


@dataclass(frozen=True)
class Grid:
    eta: float
    domain: Box

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.domain.is_empty():
            raise ValueError("empty domain")
        lo, hi = np.asarray(self.domain.lo), np.asarray(self.domain.hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("grid domain must be bounded")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def index_lo(self) -> np.ndarray:
        return _floor(np.asarray(self.domain.lo) / self.eta).astype(np.int64)

    @property
    def index_hi(self) -> np.ndarray:
        return _floor(np.asarray(self.domain.hi) / self.eta).astype(np.int64)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.index_hi - self.index_lo + 1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_points(self, axis: int) -> np.ndarray:
        k = np.arange(self.index_lo[axis], self.index_hi[axis] + 1)
        return self.eta * k + self.eta / 2

    def points(self) -> np.ndarray:
        """All grid points, first axis varying slowest."""
        axes = [self.axis_points(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def state_of(self, x) -> np.ndarray:
        """State index of the cell containing each row of ``x``; -1 off grid."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError("point dimension does not match grid")
        k = _floor(x / self.eta).astype(np.int64) - self.index_lo
        shape = np.array(self.shape)
        ok = np.all((k >= 0) & (k < shape), axis=-1)
        idx = np.full(x.shape[:-1], -1, dtype=np.int64)
        if np.any(ok):
            idx[ok] = np.ravel_multi_index(tuple(k[ok].T), self.shape)
        return idx

    def mask_from_ranges(self, ranges: Sequence[tuple[int, int]]) -> np.ndarray:
        """Boolean state mask for the product of per-axis cell-index ranges (inclusive)."""
        mask = np.zeros(self.shape, dtype=bool)
        sl = []
        for axis, (a, b) in enumerate(ranges):
            a = max(int(a), int(self.index_lo[axis]))
            b = min(int(b), int(self.index_hi[axis]))
            if a > b:
                return mask.ravel()
            sl.append(slice(a - self.index_lo[axis], b - self.index_lo[axis] + 1))
        mask[tuple(sl)] = True
        return mask.ravel()


@dataclass(frozen=True)
class Abstraction:
    """Deterministic finite transition system over grid points.

    ``succ[q, m]`` is the successor state index or ``-1`` when the
    quantized flow is not a grid state. ``epsilon`` is the bisimilarity
    margin, or None when the certificates admit none.
    """

    grid: Grid
    mode_ids: tuple
    succ: np.ndarray
    tau: float
    epsilon: Optional[float] = None

    @property
    def n_states(self) -> int:
        return self.succ.shape[0]

    @property
    def n_modes(self) -> int:
        return self.succ.shape[1]

    def points(self) -> np.ndarray:
        return self.grid.points()

    def to_json(self) -> str:
        doc = {
            "format": JSON_FORMAT,
            "version": JSON_VERSION,
            "eta": self.grid.eta,
            "tau": self.tau,
            "domain": {"lo": list(self.grid.domain.lo), "hi": list(self.grid.domain.hi)},
            "index_lo": [int(v) for v in self.grid.index_lo],
            "index_hi": [int(v) for v in self.grid.index_hi],
            "modes": [str(m) for m in self.mode_ids],
            "epsilon": self.epsilon,
            "succ": [int(v) for v in self.succ.ravel()],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Abstraction":
        doc = json.loads(text)
        if doc.get("format") != JSON_FORMAT or doc.get("version") != JSON_VERSION:
            raise ValueError("not a version-1 countsynth abstraction document")
        grid = Grid(doc["eta"], Box(doc["domain"]["lo"], doc["domain"]["hi"]))
        if list(grid.index_lo) != doc["index_lo"] or list(grid.index_hi) != doc["index_hi"]:
            raise ValueError("stored index ranges disagree with eta and domain")
        modes = tuple(doc["modes"])
        succ = np.asarray(doc["succ"], dtype=np.int64).reshape(grid.size, len(modes))
        return cls(grid, modes, succ, float(doc["tau"]), doc["epsilon"])


def build_abstraction(model: SwitchedModel, tau: float, eta: float) -> Abstraction:
    """Abstract ``model`` on the ``eta`` grid with sampling period ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = Grid(eta, model.domain)
    pts = grid.points()
    succ = np.empty((len(pts), model.n_modes), dtype=np.int64)
    for m, mode in enumerate(model.modes):
        # A successor exists when the quantized flow is again a grid state.
        succ[:, m] = grid.state_of(flow(mode, pts, tau))
    try:
        eps = min_bisim_epsilon(model, tau, eta)
    except CertificateError:
        eps = None
    return Abstraction(grid, tuple(m.id for m in model.modes), succ, float(tau), eps)


def epsilon_terms(model: SwitchedModel, tau: float, eta: float) -> list[dict]:
    """Per-mode pieces of the margin inequality ``contraction*eps + offset <= eps``."""
    rows = []
    for mode in model.modes:
        contraction = mode.kl_gain * math.exp(-mode.kl_rate * tau)
        drift = mode.disturbance_bound / mode.lipschitz * math.expm1(mode.lipschitz * tau)
        offset = drift + eta / 2
        eps = offset / (1 - contraction) if contraction < 1 else math.inf
        rows.append({"mode": mode.id, "contraction": contraction,
                     "disturbance_drift": drift, "offset": offset, "epsilon": eps})
    return rows


def min_bisim_epsilon(model: SwitchedModel, tau: float, eta: float) -> float:
    """Smallest margin for which every mode satisfies the bisimulation inequality."""
    rows = epsilon_terms(model, tau, eta)
    bad = [r["mode"] for r in rows if r["contraction"] >= 1]
    if bad:
        raise CertificateError(
            f"M*exp(-lambda*tau) >= 1 for modes {bad}; no margin exists at tau={tau}")
    return max(r["epsilon"] for r in rows)


def check_epsilon(model: SwitchedModel, tau: float, eta: float, eps: float) -> bool:
    """Whether ``eps`` satisfies the bisimulation inequality for every mode."""
    return all(r["contraction"] * eps + r["offset"] <= eps * (1 + 1e-12)
               for r in epsilon_terms(model, tau, eta))


# ---------------------------------------------------------------- counting sets

@dataclass(frozen=True)
class ContinuousCountingSet:
    """``(box or its complement) x modes`` with bound ``bound``.

    ``box=None`` means the whole state space; ``modes=None`` means all
    modes. Bounds of ``box`` may be infinite.
    """

    bound: float
    box: Optional[Box] = None
    modes: Optional[frozenset] = None
    complement: bool = False
    name: str = ""

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("counting bound must be nonnegative")
        if self.modes is not None:
            object.__setattr__(self, "modes", frozenset(self.modes))
        if self.complement and self.box is None:
            raise ValueError("complement needs a box")

    def contains(self, x, mode_idx) -> np.ndarray:
        """Membership of continuous states ``x`` (rows) under mode indices."""
        x = np.asarray(x, dtype=float)
        mode_idx = np.asarray(mode_idx)
        if self.box is None:
            inside = np.ones(x.shape[:-1], dtype=bool)
        else:
            inside = self.box.contains(x)
            if self.complement:
                inside = ~inside
        if self.modes is not None:
            inside = inside & np.isin(mode_idx, list(self.modes))
        return inside


@dataclass(frozen=True, eq=False)
class DiscreteCountingSet:
    """Set of (state, mode) pairs as a boolean mask, with bound ``bound``."""

    mask: np.ndarray
    bound: float
    name: str = ""

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise DimensionError("mask must be (n_states, n_modes)")
        if self.bound < 0:
            raise ValueError("counting bound must be nonnegative")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], n_states: int, n_modes: int,
                   bound: float, name: str = "") -> "DiscreteCountingSet":
        mask = np.zeros((n_states, n_modes), dtype=bool)
        for q, m in pairs:
            if not (0 <= q < n_states and 0 <= m < n_modes):
                raise IndexError(f"pair {(q, m)} out of range")
            mask[q, m] = True
        return cls(mask, bound, name)

    @classmethod
    def from_product(cls, states, modes, n_states: int, n_modes: int, bound: float,
                     name: str = "") -> "DiscreteCountingSet":
        """Product set; ``states``/``modes`` are index lists, masks, or None for all."""
        def as_mask(sel, n):
            if sel is None:
                return np.ones(n, dtype=bool)
            sel = np.asarray(sel)
            if sel.dtype == bool:
                if sel.shape != (n,):
                    raise DimensionError("selection mask has the wrong length")
                return sel
            m = np.zeros(n, dtype=bool)
            m[sel.astype(np.int64)] = True
            return m
        return cls(np.outer(as_mask(states, n_states), as_mask(modes, n_modes)), bound, name)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(int(q), int(m)) for q, m in zip(*np.nonzero(self.mask))]

    def with_bound(self, bound: float) -> "DiscreteCountingSet":
        return DiscreteCountingSet(self.mask, bound, self.name)

    def __contains__(self, pair) -> bool:
        q, m = pair
        return bool(self.mask[q, m])

    def __eq__(self, other):
        if not isinstance(other, DiscreteCountingSet):
            return NotImplemented
        return self.bound == other.bound and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.mask.tobytes(), self.mask.shape, self.bound))


def _expand_ranges(box: Box, eps: float, grid: Grid):
    out = []
    for axis in range(grid.dim):
        lo, hi = box.lo[axis] - eps, box.hi[axis] + eps
        a = grid.index_lo[axis] if lo == -math.inf else max(grid.index_lo[axis] - 1, _floor(lo / grid.eta))
        b = grid.index_hi[axis] if hi == math.inf else min(grid.index_hi[axis] + 1, _floor(hi / grid.eta))
        out.append((int(a), int(b)))
    return out


def _contract_ranges(box: Box, eps: float, grid: Grid):
    out = []
    for axis in range(grid.dim):
        lo, hi = box.lo[axis] + eps, box.hi[axis] - eps
        if lo == -math.inf:
            a = grid.index_lo[axis]
        else:
            a = max(grid.index_lo[axis] - 1, math.ceil(lo / grid.eta - CONTRACT_TOL))
        if hi == math.inf:
            b = grid.index_hi[axis]
        else:
            b = min(grid.index_hi[axis] + 1, math.floor(hi / grid.eta + CONTRACT_TOL) - 1)
        out.append((int(a), int(b)))
    return out


def _mode_mask(cset: ContinuousCountingSet, n_modes: int) -> np.ndarray:
    m = np.zeros(n_modes, dtype=bool)
    if cset.modes is None:
        m[:] = True
    else:
        for k in cset.modes:
            m[int(k)] = True
    return m


def _state_mask(cset: ContinuousCountingSet, eps: float, grid: Grid, inflate: bool) -> np.ndarray:
    if cset.box is None:
        return np.ones(grid.size, dtype=bool)
    if cset.box.dim != grid.dim:
        raise DimensionError("counting box dimension does not match grid")
    # The complement of a box inflates exactly where the box deflates.
    if cset.complement:
        return ~_state_mask(ContinuousCountingSet(cset.bound, cset.box), eps, grid, not inflate)
    if cset.box.is_empty():
        return np.zeros(grid.size, dtype=bool)
    ranges = _expand_ranges(cset.box, eps, grid) if inflate else _contract_ranges(cset.box, eps, grid)
    return grid.mask_from_ranges(ranges)


def expand_set(cset: ContinuousCountingSet, eps: float, grid: Grid, n_modes: int) -> DiscreteCountingSet:
    """Grid cells meeting the ``eps``-inflated set, crossed with its modes."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    states = _state_mask(cset, eps, grid, inflate=True)
    return DiscreteCountingSet(np.outer(states, _mode_mask(cset, n_modes)), cset.bound, cset.name)


def contract_set(cset: ContinuousCountingSet, eps: float, grid: Grid, n_modes: int) -> DiscreteCountingSet:
    """Grid cells lying inside the ``eps``-deflated set, crossed with its modes."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    states = _state_mask(cset, eps, grid, inflate=False)
    return DiscreteCountingSet(np.outer(states, _mode_mask(cset, n_modes)), cset.bound, cset.name)
