"""Best-bound branch and bound over binary columns."""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .model import (
    GAP_REACHED,
    INFEASIBLE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    ModelArrays,
    Solution,
    SolveOptions,
    relative_gap,
)
from .simplex import resolve, simplex


def _most_fractional(x: np.ndarray, binary_idx: np.ndarray, int_tol: float) -> int | None:
    vals = x[binary_idx]
    frac = np.abs(vals - np.round(vals))
    if frac.max(initial=0.0) <= int_tol:
        return None
    # argmax returns the first (lowest column) among equally fractional columns
    return int(binary_idx[int(np.argmax(frac))])


def branch_and_bound(arr: ModelArrays, opts: SolveOptions, incumbent: np.ndarray | None = None) -> Solution:
    start = time.perf_counter()
    A = arr.A.toarray()
    binary_idx = np.flatnonzero(arr.binary)
    lb0 = arr.lb.copy()
    ub0 = arr.ub.copy()
    lb0[binary_idx] = np.maximum(lb0[binary_idx], 0.0)
    ub0[binary_idx] = np.minimum(ub0[binary_idx], 1.0)
    # integral bounds on binaries
    lb0[binary_idx] = np.ceil(lb0[binary_idx] - opts.int_tol)
    ub0[binary_idx] = np.floor(ub0[binary_idx] + opts.int_tol)

    stats = {"lp_iterations": 0, "nodes": 0, "incumbents": []}

    tol = min(1e-9, opts.feas_tol)

    def relax(lb, ub, warm=None):
        # children re-solve from the parent's optimal basis
        if warm is not None:
            res = resolve(warm, lb, ub, tol=tol)
        else:
            res = simplex(arr.c, A, arr.sense, arr.b, lb, ub, tol=tol)
        stats["lp_iterations"] += res.iterations
        return res

    best_x = None
    best_obj = math.inf
    if incumbent is not None:
        best_x = np.asarray(incumbent, dtype=float).copy()
        best_obj = float(arr.c @ best_x)
        stats["incumbents"].append(best_obj + arr.c0)

    def offer(x, obj):
        nonlocal best_x, best_obj
        if obj < best_obj - 1e-12 * max(1.0, abs(obj)):
            x = x.copy()
            x[binary_idx] = np.round(x[binary_idx])
            best_x, best_obj = x, obj
            stats["incumbents"].append(obj + arr.c0)

    def finish(status, bound):
        stats["time"] = time.perf_counter() - start
        if best_x is None:
            return Solution(status if status != OPTIMAL else INFEASIBLE, stats=stats,
                            best_bound=bound + arr.c0 if math.isfinite(bound) else bound)
        obj = best_obj + arr.c0
        bound = min(bound, best_obj) + arr.c0
        return Solution(status, obj, bound, relative_gap(obj, bound), best_x, stats)

    root = relax(lb0, ub0)
    stats["nodes"] = 1
    if root.status == INFEASIBLE:
        return finish(INFEASIBLE, math.inf)
    if root.status == UNBOUNDED:
        stats["time"] = time.perf_counter() - start
        return Solution(UNBOUNDED, -math.inf, -math.inf, math.inf, None, stats)
    if root.status == LIMIT:
        return finish(LIMIT, -math.inf)

    # tie-breaker keeps the search order deterministic
    heap: list = []
    seq = 0

    def push(res, lb, ub):
        nonlocal seq
        j = _most_fractional(res.x, binary_idx, opts.int_tol)
        if j is None:
            offer(res.x, res.objective)
            return
        if res.objective >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            return
        heapq.heappush(heap, (res.objective, seq, j, lb, ub, res.x, res.warm))
        seq += 1

    push(root, lb0, ub0)
    if best_x is None and heap:
        _round_heuristic(relax, root.x, binary_idx, lb0, ub0, offer, root.warm)

    while heap:
        bound = heap[0][0]
        if bound >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            heap.clear()
            break
        gap = relative_gap(best_obj + arr.c0, bound + arr.c0)
        if best_x is not None and gap <= opts.mip_gap:
            return finish(GAP_REACHED, bound)
        if time.perf_counter() - start > opts.time_limit or (
            opts.node_limit is not None and stats["nodes"] >= opts.node_limit
        ):
            return finish(LIMIT, bound)
        _, _, j, lb, ub, _, warm = heapq.heappop(heap)
        for val in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            res = relax(clb, cub, warm)
            stats["nodes"] += 1
            if res.status == OPTIMAL:
                push(res, clb, cub)
            elif res.status == LIMIT:
                return finish(LIMIT, bound)
        if best_x is None and stats["nodes"] % 25 == 1 and heap:
            top = heap[0]
            _round_heuristic(relax, top[5], binary_idx, top[3], top[4], offer, top[6])

    if best_x is None:
        return finish(INFEASIBLE, math.inf)
    return finish(OPTIMAL, best_obj)


def _round_heuristic(relax, x, binary_idx, lb, ub, offer, warm=None) -> None:
    """Fix binaries to their rounded LP values and re-solve the continuous part."""
    rlb, rub = lb.copy(), ub.copy()
    rounded = np.clip(np.round(x[binary_idx]), rlb[binary_idx], rub[binary_idx])
    rlb[binary_idx] = rub[binary_idx] = rounded
    res = relax(rlb, rub, warm)
    if res.status == OPTIMAL:
        offer(res.x, res.objective)
