"""Switched polynomial vector fields, their certificates, and RK4 flows.

A mode is a sparse multivariate polynomial vector field. Each coordinate
of the field is a mapping from exponent tuples to coefficients, so that

    {(1, 0): -2.0, (0, 1): 1.0, (0, 0): 2.0}

encodes ``-2*x0 + x1 + 2``. Disturbances enter additively and are held
constant over a flow.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, DisturbanceBoundError, IntegrationError

#: RK4 substeps per sampling period.
SUBSTEPS = 32


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]``; infinite bounds are allowed."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise DimensionError("box bounds differ in dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def is_empty(self) -> bool:
        return any(l > h for l, h in zip(self.lo, self.hi))

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)

    def corners(self) -> np.ndarray:
        return np.array(np.meshgrid(*zip(self.lo, self.hi), indexing="ij")).reshape(self.dim, -1).T


def _normalize_field(field_spec) -> tuple:
    coords = []
    for comp in field_spec:
        items = comp.items() if isinstance(comp, Mapping) else comp
        terms = {}
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent in polynomial field")
            terms[exps] = terms.get(exps, 0.0) + float(coeff)
        coords.append(tuple(sorted((e, c) for e, c in terms.items() if c != 0.0)))
    return tuple(coords)


@dataclass(frozen=True)
class Mode:
    """One mode of the switched system with its incremental-stability data.

    The certificate is ``beta(r, t) = kl_gain * r * exp(-kl_rate * t)``;
    ``lipschitz`` is the sup-norm Lipschitz constant of the field on the
    domain and ``disturbance_bound`` bounds the additive disturbance.
    """

    id: str
    field: tuple
    lipschitz: float
    kl_gain: float
    kl_rate: float
    disturbance_bound: float = 0.0
    n_x: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "field", _normalize_field(self.field))
        n_x = len(self.field)
        if n_x == 0:
            raise DimensionError("a mode needs at least one coordinate")
        for comp in self.field:
            for exps, _ in comp:
                if len(exps) != n_x:
                    raise DimensionError(f"exponent tuple {exps} does not match dimension {n_x}")
        object.__setattr__(self, "n_x", n_x)
        if not self.lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")
        if not self.kl_rate > 0:
            raise ValueError("KL decay rate must be positive")
        if not self.kl_gain >= 1:
            raise ValueError("KL gain must be at least 1 for beta(r, 0) >= r")
        if not self.disturbance_bound >= 0:
            raise ValueError("disturbance bound must be nonnegative")

    @cached_property
    def _compiled(self):
        out = []
        for comp in self.field:
            if comp:
                exps = np.array([e for e, _ in comp], dtype=float)
                coeffs = np.array([c for _, c in comp])
            else:
                exps = np.zeros((0, self.n_x))
                coeffs = np.zeros(0)
            out.append((exps, coeffs))
        return out

    def beta(self, r: float, t: float) -> float:
        return self.kl_gain * r * math.exp(-self.kl_rate * t)

    @cached_property
    def _terms(self):
        """Per coordinate: list of (coefficient, ((axis, power), ...))."""
        return [[(c, tuple((j, int(k)) for j, k in enumerate(e) if k)) for e, c in comp]
                for comp in self.field]

    def nominal(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the undisturbed field on an array of states ``(..., n_x)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pows: dict = {}

        def power(j, k):
            if (j, k) not in pows:
                pows[(j, k)] = x[..., j] if k == 1 else power(j, k - 1) * x[..., j]
            return pows[(j, k)]

        for i, terms in enumerate(self._terms):
            acc = out[..., i]
            for c, factors in terms:
                if not factors:
                    acc += c
                    continue
                mono = power(*factors[0])
                for f in factors[1:]:
                    mono = mono * power(*f)
                acc += c * mono
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian, shape ``(..., n_x, n_x)``."""
        x = np.asarray(x, dtype=float)
        jac = np.zeros(x.shape + (self.n_x,))
        for i, (exps, coeffs) in enumerate(self._compiled):
            for j in range(self.n_x):
                e = exps[:, j]
                keep = e > 0
                if not keep.any():
                    continue
                de = exps[keep].copy()
                de[:, j] -= 1
                mono = np.prod(x[..., None, :] ** de, axis=-1)
                jac[..., i, j] = mono @ (coeffs[keep] * e[keep])
        return jac


def affine_mode(id: str, A, b, **certificate) -> Mode:
    """Build a mode for the affine field ``A x + b``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise DimensionError("A must be square and match b")
    comps = []
    for i in range(n):
        terms = {tuple(int(k == j) for k in range(n)): A[i, j] for j in range(n)}
        terms[(0,) * n] = terms.get((0,) * n, 0.0) + b[i]
        comps.append(terms)
    return Mode(id, comps, **certificate)


@dataclass(frozen=True)
class SwitchedModel:
    modes: tuple[Mode, ...]
    domain: Box

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("a switched model needs at least one mode")
        n_x = modes[0].n_x
        if any(m.n_x != n_x for m in modes):
            raise DimensionError("all modes must share the state dimension")
        if self.domain.dim != n_x:
            raise DimensionError("domain dimension does not match the modes")
        if any(l >= h for l, h in zip(self.domain.lo, self.domain.hi)):
            raise ValueError("domain needs lower < upper on every axis")
        object.__setattr__(self, "modes", modes)

    @property
    def n_x(self) -> int:
        return self.modes[0].n_x

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def mode_index(self, id) -> int:
        for k, m in enumerate(self.modes):
            if m.id == id:
                return k
        raise KeyError(id)


def _check_state(mode: Mode, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != mode.n_x:
        raise DimensionError(f"state has trailing dimension {x.shape[-1:]}; mode expects {mode.n_x}")
    return x


def _check_disturbance(mode: Mode, x: np.ndarray, d) -> np.ndarray:
    if d is None:
        return np.zeros(x.shape[-1])
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != mode.n_x:
        raise DimensionError("disturbance dimension does not match the mode")
    if np.any(np.abs(d) > mode.disturbance_bound + 1e-12):
        raise DisturbanceBoundError(
            f"disturbance exceeds bound {mode.disturbance_bound} of mode {mode.id!r}")
    return d


def eval_field(mode: Mode, x, d=None) -> np.ndarray:
    """Return ``f(x) + d``. Arrays of states ``(..., n_x)`` are accepted."""
    x = _check_state(mode, x)
    d = _check_disturbance(mode, x, d)
    return mode.nominal(x) + d


def flow(mode: Mode, x, tau: float, d=None, substeps: int = SUBSTEPS) -> np.ndarray:
    """Classical RK4 approximation of the flow over ``tau`` with a constant disturbance."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = _check_state(mode, x).copy()
    d = _check_disturbance(mode, x, d)
    h = tau / substeps

    def f(y):
        return mode.nominal(y) + d

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(substeps):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state while integrating mode {mode.id!r}")
    return x


def lipschitz_estimate(mode: Mode, domain: Box, samples: int = 2000, seed: int = 0) -> float:
    """Sampled lower bound on the sup-norm Lipschitz constant over ``domain``.

    Evaluates the induced infinity norm of the Jacobian at the box corners
    and at seeded uniform samples. Warns when the estimate exceeds the
    declared constant of the mode.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if domain.is_empty():
        raise ValueError("empty domain")
    lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("domain must be bounded")
    rng = np.random.default_rng(seed)
    pts = np.vstack([domain.corners(), lo + (hi - lo) * rng.random((samples, len(lo)))])
    jac = mode.jacobian(pts)
    est = float(np.max(np.abs(jac).sum(axis=-1))) if jac.size else 0.0
    if est > mode.lipschitz * (1 + 1e-9):
        warnings.warn(f"sampled Lipschitz estimate {est:.4g} exceeds declared "
                      f"K={mode.lipschitz:.4g} for mode {mode.id!r}", stacklevel=2)
    return est
