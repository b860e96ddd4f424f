"""Sparse linear program container shared by the builders and the solvers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix, vstack, coo_matrix

SENSES = ("L", "E", "G")


@dataclass
class LinearProgram:
    """Rows ``A x (sense) rhs`` over variables ``lb <= x <= ub``.

    ``sense`` holds one of ``L`` (<=), ``E`` (=), ``G`` (>=) per row.
    ``blocks`` and ``row_families`` name contiguous column and row ranges.
    """

    A: csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    var_names: list[str]
    row_names: list[str]
    blocks: dict = field(default_factory=dict)
    row_families: dict = field(default_factory=dict)
    objective: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = csr_matrix(self.A, dtype=float)
        m, n = self.A.shape
        self.sense = np.asarray(self.sense, dtype="<U1").reshape(m)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(m)
        self.lb = np.asarray(self.lb, dtype=float).reshape(n)
        self.ub = np.asarray(self.ub, dtype=float).reshape(n)
        self.integer = np.asarray(self.integer, dtype=bool).reshape(n)
        if not set(self.sense.tolist()) <= set(SENSES):
            raise ValueError("row sense must be L, E or G")
        if len(self.var_names) != n or len(self.row_names) != m:
            raise ValueError("name lists do not match the matrix shape")
        if not np.all(np.isfinite(self.A.data)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("coefficients must be finite")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_dense(cls, A, sense, rhs, lb=None, ub=None, integer=None, var_names=None,
                   row_names=None) -> "LinearProgram":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m, n = A.shape
        if m == 1 and A.size == 0:
            m = 0
        lb = np.zeros(n) if lb is None else lb
        ub = np.full(n, np.inf) if ub is None else ub
        integer = np.zeros(n, dtype=bool) if integer is None else integer
        var_names = var_names or [f"x{j}" for j in range(n)]
        row_names = row_names or [f"r{i}" for i in range(m)]
        return cls(csr_matrix(A.reshape(m, n)), list(sense), rhs, lb, ub, integer, var_names, row_names)

    def block(self, name: str, x) -> np.ndarray:
        return np.asarray(x)[self.blocks[name]]

    def residuals(self, x) -> np.ndarray:
        """Per-row violation (nonnegative) of the raw constraints at ``x``."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        viol = np.where(self.sense == "L", np.maximum(ax - self.rhs, 0), viol)
        viol = np.where(self.sense == "G", np.maximum(self.rhs - ax, 0), viol)
        viol = np.where(self.sense == "E", np.abs(ax - self.rhs), viol)
        return viol

    def max_violation(self, x) -> float:
        """Largest row or bound violation at ``x``, from plain dot products."""
        x = np.asarray(x, dtype=float)
        rv = self.residuals(x)
        bv = np.maximum(np.maximum(self.lb - x, x - self.ub), 0)
        return float(max(rv.max(initial=0.0), bv.max(initial=0.0)))

    def is_feasible(self, x, tol: float = 1e-7, int_tol: float = 1e-6) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,) or not np.all(np.isfinite(x)):
            return False
        if np.any(np.abs(x[self.integer] - np.round(x[self.integer])) > int_tol):
            return False
        return self.max_violation(x) <= tol


def stack_rows(parts, n_vars: int):
    """Concatenate (matrix, sense, rhs, names) row chunks."""
    mats = [p[0] for p in parts if p[0].shape[0]]
    A = vstack(mats, format="csr") if mats else csr_matrix((0, n_vars))
    sense = np.concatenate([np.asarray(p[1], dtype="<U1") for p in parts]) if parts else np.zeros(0, "<U1")
    rhs = np.concatenate([np.asarray(p[2], dtype=float) for p in parts]) if parts else np.zeros(0)
    names = [nm for p in parts for nm in p[3]]
    return A, sense, rhs, names


def rows_from_triplets(rows, cols, vals, n_rows: int, n_vars: int) -> csr_matrix:
    m = coo_matrix((np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64),
                   np.asarray(cols, dtype=np.int64))), shape=(n_rows, n_vars))
    return m.tocsr()
