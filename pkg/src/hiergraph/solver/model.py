"""Flat model, solve options and solution containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ..expr import EQ, GE, LE, LinExpr, LinearConstraint, VariableDef

OPTIMAL = "optimal"
GAP_REACHED = "gap_reached"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"

SENSE_CODE = {LE: -1, EQ: 0, GE: 1}


@dataclass
class MilpModel:
    """Minimization model over integer column indices.

    ``rows`` and ``objective`` use ints ``0..len(columns)-1`` as keys.
    """

    columns: list[VariableDef]
    rows: list[LinearConstraint]
    objective: LinExpr
    row_names: list[str] | None = None

    def __post_init__(self):
        n = len(self.columns)
        for i, r in enumerate(self.rows):
            for k in r.body.terms:
                if not (isinstance(k, (int, np.integer)) and 0 <= k < n):
                    raise ValueError(f"row {i} references column {k!r} outside [0, {n})")
        for k in self.objective.terms:
            if not (isinstance(k, (int, np.integer)) and 0 <= k < n):
                raise ValueError(f"objective references column {k!r} outside [0, {n})")

    @property
    def num_columns(self) -> int:
        return len(self.columns)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def binary_columns(self) -> list[int]:
        return [j for j, v in enumerate(self.columns) if v.is_binary]

    def relaxed(self) -> MilpModel:
        cols = [replace(v, domain="continuous") if v.is_binary else v for v in self.columns]
        return MilpModel(cols, self.rows, self.objective, self.row_names)

    def arrays(self) -> ModelArrays:
        n, m = self.num_columns, self.num_rows
        c = np.zeros(n)
        for j, v in self.objective.terms.items():
            c[j] = v
        data, ri, ci = [], [], []
        for i, r in enumerate(self.rows):
            for j, v in r.body.terms.items():
                ri.append(i)
                ci.append(j)
                data.append(v)
        A = sp.csr_matrix((data, (ri, ci)), shape=(m, n))
        sense = np.array([SENSE_CODE[r.sense] for r in self.rows], dtype=int)
        b = np.array([r.rhs for r in self.rows], dtype=float)
        lb = np.array([v.lower for v in self.columns], dtype=float)
        ub = np.array([v.upper for v in self.columns], dtype=float)
        binary = np.array([v.is_binary for v in self.columns], dtype=bool)
        return ModelArrays(c, self.objective.constant, A, sense, b, lb, ub, binary)

    def objective_value(self, values) -> float:
        return self.objective.value(values)

    def max_violation(self, values, int_tol: float | None = None) -> float:
        """Largest row, bound, or integrality violation of ``values``."""
        x = np.asarray(values, dtype=float)
        worst = 0.0
        for r in self.rows:
            worst = max(worst, r.violation(x))
        for j, v in enumerate(self.columns):
            worst = max(worst, v.lower - x[j], x[j] - v.upper)
            if int_tol is not None and v.is_binary:
                worst = max(worst, abs(x[j] - round(x[j])))
        return worst


@dataclass
class ModelArrays:
    c: np.ndarray
    c0: float
    A: sp.csr_matrix
    sense: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray


@dataclass
class SolveOptions:
    mip_gap: float = 0.005
    time_limit: float = math.inf
    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    node_limit: int | None = None
    # "native" (own simplex + branch and bound), "highs" (scipy/HiGHS) or "auto"
    backend: str = "auto"
    native_max_columns: int = 2000

    def __post_init__(self):
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be nonnegative")
        if self.feas_tol <= 0 or self.int_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.backend not in ("auto", "native", "highs"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class Solution:
    status: str
    objective: float = math.nan
    best_bound: float = math.nan
    gap: float = math.nan
    values: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, GAP_REACHED)


def relative_gap(objective: float, bound: float) -> float:
    if not (math.isfinite(objective) and math.isfinite(bound)):
        return math.inf
    return abs(objective - bound) / max(1e-10, abs(objective))
