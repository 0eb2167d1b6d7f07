"""LP/MILP solving for flattened models.

Two backends sit behind :func:`solve_lp` / :func:`solve_milp`: a native
dense bounded-variable simplex with best-bound branch and bound, and HiGHS
(via scipy) for models wider than ``SolveOptions.native_max_columns``.
"""

from __future__ import annotations

import numpy as np

from .branch_bound import branch_and_bound
from .formats import export_lp, export_mps, import_solution, parse_lp, parse_mps
from .highs import solve_highs
from .model import (
    GAP_REACHED,
    INFEASIBLE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    MilpModel,
    ModelArrays,
    Solution,
    SolveOptions,
    relative_gap,
)
from .simplex import simplex

__all__ = [
    "GAP_REACHED", "INFEASIBLE", "LIMIT", "OPTIMAL", "UNBOUNDED",
    "MilpModel", "ModelArrays", "Solution", "SolveOptions",
    "solve_lp", "solve_milp", "max_violation",
    "export_mps", "export_lp", "parse_mps", "parse_lp", "import_solution",
    "relative_gap",
]


def _use_native(model: MilpModel, opts: SolveOptions) -> bool:
    if opts.backend == "auto":
        return model.num_columns <= opts.native_max_columns
    return opts.backend == "native"


def max_violation(arr: ModelArrays, x: np.ndarray, int_tol: float | None = None) -> float:
    """Worst row/bound (and optionally integrality) violation, vectorized."""
    x = np.asarray(x, dtype=float)
    worst = 0.0
    if arr.A.shape[0]:
        ax = arr.A @ x
        le = arr.sense < 0
        ge = arr.sense > 0
        eq = arr.sense == 0
        viol = np.zeros_like(ax)
        viol[le] = ax[le] - arr.b[le]
        viol[ge] = arr.b[ge] - ax[ge]
        viol[eq] = np.abs(ax[eq] - arr.b[eq])
        worst = max(worst, float(viol.max()))
    if len(x):
        worst = max(worst, float(np.max(arr.lb - x)), float(np.max(x - arr.ub)))
        if int_tol is not None and arr.binary.any():
            xb = x[arr.binary]
            worst = max(worst, float(np.abs(xb - np.round(xb)).max()))
    return max(worst, 0.0)


def _certify(sol: Solution, arr: ModelArrays, opts: SolveOptions, integral: bool) -> Solution:
    if sol.values is not None:
        sol.stats["max_violation"] = max_violation(arr, sol.values, opts.int_tol if integral else None)
    return sol


def solve_lp(model: MilpModel, opts: SolveOptions | None = None) -> Solution:
    """Solve the continuous relaxation of ``model``."""
    opts = opts or SolveOptions()
    arr = model.relaxed().arrays()
    if not _use_native(model, opts):
        return _certify(solve_highs(arr, opts, relax=True), arr, opts, False)
    res = simplex(arr.c, arr.A.toarray(), arr.sense, arr.b, arr.lb, arr.ub, tol=min(1e-9, opts.feas_tol))
    stats = {"lp_iterations": res.iterations, "backend": "native"}
    if res.status != OPTIMAL:
        obj = res.objective if res.status == UNBOUNDED else float("nan")
        return Solution(res.status, obj, obj, float("nan"), None, stats)
    obj = res.objective + arr.c0
    return _certify(Solution(OPTIMAL, obj, obj, 0.0, res.x, stats), arr, opts, False)


def solve_milp(model: MilpModel, opts: SolveOptions | None = None, incumbent=None) -> Solution:
    """Branch and bound on the binary columns of ``model``.

    ``incumbent`` optionally seeds the search with a known feasible point
    (native backend only; ignored by HiGHS).
    """
    opts = opts or SolveOptions()
    arr = model.arrays()
    if not _use_native(model, opts):
        sol = solve_highs(arr, opts)
    else:
        sol = branch_and_bound(arr, opts, incumbent=incumbent)
        sol.stats["backend"] = "native"
    return _certify(sol, arr, opts, True)
