"""HiGHS backend through :func:`scipy.optimize.milp` for models too large for the dense tableau."""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import GAP_REACHED, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, ModelArrays, Solution, SolveOptions, relative_gap


def solve_highs(arr: ModelArrays, opts: SolveOptions, relax: bool = False) -> Solution:
    start = time.perf_counter()
    big = 1e30
    row_lo = np.where(arr.sense >= 0, arr.b, -big)
    row_hi = np.where(arr.sense <= 0, arr.b, big)
    integrality = np.zeros(len(arr.c)) if relax else arr.binary.astype(float)
    options = {"mip_rel_gap": opts.mip_gap, "presolve": True}
    if math.isfinite(opts.time_limit):
        options["time_limit"] = opts.time_limit
    if opts.node_limit is not None:
        options["node_limit"] = opts.node_limit
    constraints = LinearConstraint(arr.A, row_lo, row_hi) if arr.A.shape[0] else None
    lb = arr.lb.copy()
    ub = arr.ub.copy()
    if not relax:
        lb[arr.binary] = np.maximum(lb[arr.binary], 0.0)
        ub[arr.binary] = np.minimum(ub[arr.binary], 1.0)
    res = milp(arr.c, integrality=integrality, bounds=Bounds(lb, ub), constraints=constraints, options=options)
    stats = {"time": time.perf_counter() - start, "nodes": getattr(res, "mip_node_count", None), "backend": "highs"}
    if res.status == 2:
        return Solution(INFEASIBLE, stats=stats)
    if res.status == 3:
        return Solution(UNBOUNDED, -math.inf, -math.inf, math.inf, stats=stats)
    if res.x is None and res.status == 4:
        # "infeasible or unbounded": a zero objective separates the two
        probe = milp(np.zeros_like(arr.c), integrality=integrality, bounds=Bounds(lb, ub),
                     constraints=constraints, options=options)
        if probe.status == 2:
            return Solution(INFEASIBLE, stats=stats)
        if probe.status == 0:
            return Solution(UNBOUNDED, -math.inf, -math.inf, math.inf, stats=stats)
    if res.x is None:
        return Solution(LIMIT, stats=stats)
    x = np.asarray(res.x, dtype=float)
    if not relax:
        x[arr.binary] = np.round(x[arr.binary])
    obj = float(arr.c @ x) + arr.c0
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not math.isfinite(bound) else min(float(bound) + arr.c0, obj)
    gap = relative_gap(obj, bound)
    if res.status == 0:
        status = OPTIMAL if gap <= 1e-9 or relax or not arr.binary.any() else GAP_REACHED
    else:
        status = LIMIT
    return Solution(status, obj, bound, gap, x, stats)
