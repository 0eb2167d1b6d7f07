"""Bounded-variable primal simplex on a dense tableau.

Every row gets a slack so the working system is ``[A I] (x, s) = b`` with
box bounds on all columns; ``<=`` rows have ``s >= 0``, ``>=`` rows ``s <= 0``,
equalities ``s = 0``.  Phase 1 adds artificials only for rows the slacks
cannot absorb.  Dantzig pricing switches to Bland's rule after a run of
degenerate pivots.

:func:`resolve` re-optimizes after bound changes starting from a previous
optimal basis: a bounded dual simplex restores primal feasibility, then a
primal pass cleans up any residual dual infeasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import INFEASIBLE, OPTIMAL, UNBOUNDED, LIMIT

PIVOT_TOL = 1e-9
STALL_LIMIT = 50
REFACTOR_EVERY = 100


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    warm: WarmStart | None = None


@dataclass
class _Context:
    """Column/row layout of the working tableau, shared by warm re-solves."""

    c: np.ndarray
    fixed: np.ndarray       # columns fixed (and removed) at presolve
    fixed_val: np.ndarray
    free_cols: np.ndarray
    orig: np.ndarray        # [A_red I Art]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    allowed: np.ndarray
    cost: np.ndarray
    nr: int
    problem: tuple          # original (A, sense, b) for cold fallbacks


@dataclass
class WarmStart:
    ctx: _Context
    basis: np.ndarray
    x: np.ndarray


class _Tableau:
    def __init__(self, M, b, lo, hi, x, basis, cost):
        self.M = M              # B^-1 [A I Art], m x N
        self.orig = None        # unreduced columns for refactoring
        self.b = b
        self.lo = lo
        self.hi = hi
        self.x = x
        self.basis = basis      # column index basic in each row
        self.set_cost(cost)

    def set_cost(self, cost):
        self.cost = cost
        if self.M is not None:
            self.d = cost - cost[self.basis] @ self.M

    def refactor(self):
        B = self.orig[:, self.basis]
        self.M = np.linalg.solve(B, self.orig)
        nonbasic = np.ones(self.M.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.orig[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, rhs)
        self.d = self.cost - self.cost[self.basis] @ self.M

    def pivot(self, r, j):
        col = self.M[:, j].copy()
        piv = col[r]
        self.M[r] /= piv
        col[r] = 0.0
        self.M -= np.outer(col, self.M[r])
        self.d -= self.d[j] * self.M[r]
        self.basis[r] = j


def _iterate(tab: _Tableau, allowed: np.ndarray, tol: float, max_iter: int, counter: list) -> str:
    """Run primal simplex on the current cost; returns a status string."""
    m = tab.M.shape[0]
    stall = 0
    since_refactor = 0
    is_basic = np.zeros(tab.M.shape[1], dtype=bool)
    is_basic[tab.basis] = True
    while True:
        if counter[0] >= max_iter:
            return LIMIT
        d = tab.d
        x = tab.x
        at_lo = x <= tab.lo + tol
        at_hi = x >= tab.hi - tol
        can_up = allowed & ~is_basic & ~at_hi & (d < -tol)
        can_down = allowed & ~is_basic & ~at_lo & (d > tol)
        eligible = can_up | can_down
        if not eligible.any():
            return OPTIMAL
        bland = stall >= STALL_LIMIT
        if bland:
            j = int(np.flatnonzero(eligible)[0])
        else:
            score = np.where(eligible, np.abs(d), -1.0)
            j = int(np.argmax(score))
        direction = 1.0 if can_up[j] else -1.0

        rate = -direction * tab.M[:, j]     # d x_B / d step
        xb = x[tab.basis]
        lob = tab.lo[tab.basis]
        hib = tab.hi[tab.basis]
        ratios = np.full(m, math.inf)
        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[dec] = (xb[dec] - lob[dec]) / -rate[dec]
            ratios[inc] = (hib[inc] - xb[inc]) / rate[inc]
        ratios = np.maximum(ratios, 0.0)
        flip = tab.hi[j] - tab.lo[j]
        theta_row = ratios.min() if m else math.inf
        if not math.isfinite(theta_row) and not math.isfinite(flip):
            return UNBOUNDED
        counter[0] += 1
        if flip <= theta_row:
            step = flip
            x[j] += direction * step
            x[tab.basis] = xb + rate * step
            stall = 0 if step > tol else stall + 1
            continue
        step = theta_row
        ties = np.flatnonzero(ratios <= theta_row + 1e-12)
        if bland:
            r = int(ties[np.argmin(tab.basis[ties])])
        else:
            # largest pivot among near-ties keeps the tableau well conditioned,
            # remaining ties resolve to the lowest row index
            mags = np.abs(rate[ties])
            r = int(ties[np.flatnonzero(mags >= mags.max() * 0.999)[0]])
        leaving = tab.basis[r]
        x[j] += direction * step
        x[tab.basis] = xb + rate * step
        # snap the leaving variable onto the bound it reached
        x[leaving] = tab.lo[leaving] if rate[r] < 0 else tab.hi[leaving]
        tab.pivot(r, j)
        is_basic[leaving] = False
        is_basic[j] = True
        stall = 0 if step > tol else stall + 1
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            tab.refactor()
            since_refactor = 0


def simplex(c, A, sense, b, lb, ub, tol: float = 1e-9, max_iter: int = 200_000) -> LPResult:
    """Minimize ``c @ x`` s.t. rows of ``A x (sense) b`` and ``lb <= x <= ub``.

    ``sense`` holds -1 (<=), 0 (==) or +1 (>=) per row.  ``A`` is dense.
    """
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape
    if np.any(lb > ub + tol):
        return LPResult(INFEASIBLE, None, math.nan, 0)

    # presolve: fixed columns move to the right-hand side, empty rows are checked and dropped
    fixed = lb == ub
    free_cols = np.flatnonzero(~fixed)
    b_eff = b - A[:, fixed] @ lb[fixed]
    A_red = A[:, free_cols]
    nonempty = np.any(A_red != 0.0, axis=1)
    for i in np.flatnonzero(~nonempty):
        bi = b_eff[i]
        s = sense[i]
        if (s < 0 and bi < -1e-7) or (s > 0 and bi > 1e-7) or (s == 0 and abs(bi) > 1e-7):
            return LPResult(INFEASIBLE, None, math.nan, 0)
    rows = np.flatnonzero(nonempty)
    A_red = A_red[rows]
    b_red = b_eff[rows]
    sense_red = np.asarray(sense)[rows]
    x_full = np.where(fixed, lb, 0.0)
    if A_red.shape[0] == 0:
        # bound-only problem
        cc = c[free_cols]
        lo, hi = lb[free_cols], ub[free_cols]
        xv = np.where(cc > 0, lo, np.where(cc < 0, hi, np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))))
        if not np.all(np.isfinite(xv)):
            return LPResult(UNBOUNDED, None, -math.inf, 0)
        x_full[free_cols] = xv
        return LPResult(OPTIMAL, x_full, float(c @ x_full), 0)

    mr, nr = A_red.shape
    s_lo = np.where(sense_red < 0, 0.0, np.where(sense_red > 0, -math.inf, 0.0))
    s_hi = np.where(sense_red < 0, math.inf, np.where(sense_red > 0, 0.0, 0.0))
    lo_x, hi_x = lb[free_cols], ub[free_cols]
    x0 = np.where(np.isfinite(lo_x), lo_x, np.where(np.isfinite(hi_x), hi_x, 0.0))
    resid = b_red - A_red @ x0

    # slack absorbs the residual when its bounds allow; otherwise an artificial does
    slack_ok = (resid >= s_lo - tol) & (resid <= s_hi + tol)
    art_rows = np.flatnonzero(~slack_ok)
    na = len(art_rows)
    N = nr + mr + na
    orig = np.zeros((mr, N))
    orig[:, :nr] = A_red
    orig[:, nr:nr + mr] = np.eye(mr)
    sign = np.where(resid[art_rows] >= 0, 1.0, -1.0)
    orig[art_rows, nr + mr + np.arange(na)] = sign
    lo = np.concatenate([lo_x, s_lo, np.zeros(na)])
    hi = np.concatenate([hi_x, s_hi, np.full(na, math.inf)])
    x = np.concatenate([x0, np.zeros(mr), np.zeros(na)])
    basis = np.arange(nr, nr + mr)
    basis_vals = resid.copy()
    for k, r in enumerate(art_rows):
        basis[r] = nr + mr + k
        basis_vals[r] = abs(resid[r])
    x[basis] = basis_vals
    x[nr:nr + mr][~slack_ok] = 0.0
    # M = B^-1 orig; B is diagonal (+-1 / 1)
    diag = np.ones(mr)
    diag[art_rows] = sign
    M = orig / diag[:, None]

    counter = [0]
    allowed = np.ones(N, dtype=bool)
    if na:
        cost1 = np.zeros(N)
        cost1[nr + mr:] = 1.0
        tab = _Tableau(M, b_red, lo, hi, x, basis, cost1)
        tab.orig = orig
        status = _iterate(tab, allowed, tol, max_iter, counter)
        if status == LIMIT:
            return LPResult(LIMIT, None, math.nan, counter[0])
        tab.refactor()
        infeas = tab.x[nr + mr:].sum()
        if infeas > 1e-7 * max(1.0, np.abs(b_red).max()):
            return LPResult(INFEASIBLE, None, math.nan, counter[0])
        # pin artificials to zero and try to pivot them out of the basis
        tab.hi[nr + mr:] = 0.0
        tab.x[nr + mr:] = 0.0
        allowed[nr + mr:] = False
        for r in range(mr):
            if tab.basis[r] >= nr + mr:
                row = np.abs(tab.M[r, :nr + mr])
                row[tab.basis[tab.basis < nr + mr]] = 0.0
                j = int(np.argmax(row))
                if row[j] > 1e-7:
                    tab.pivot(r, j)
        tab.refactor()
    else:
        tab = _Tableau(M, b_red, lo, hi, x, basis, np.zeros(N))
        tab.orig = orig

    cost2 = np.zeros(N)
    cost2[:nr] = c[free_cols]
    tab.set_cost(cost2)
    status = _iterate(tab, allowed, tol, max_iter, counter)
    if status != OPTIMAL:
        return LPResult(status, None, -math.inf if status == UNBOUNDED else math.nan, counter[0])
    tab.refactor()
    xs = np.clip(tab.x[:nr], lo_x, hi_x)
    x_full[free_cols] = xs
    ctx = _Context(c, fixed, lb[fixed].copy(), free_cols, orig, b_red, tab.lo.copy(), tab.hi.copy(),
                   allowed.copy(), cost2, nr, (A, sense, b))
    warm = WarmStart(ctx, tab.basis.copy(), tab.x.copy())
    return LPResult(OPTIMAL, x_full, float(c @ x_full), counter[0], warm)


def _dual(tab: _Tableau, allowed: np.ndarray, nr: int, tol: float, max_iter: int, counter: list) -> str:
    """Bounded dual simplex from a dual-feasible basis; stops once primal feasible."""
    m = tab.M.shape[0]
    is_basic = np.zeros(tab.M.shape[1], dtype=bool)
    is_basic[tab.basis] = True
    free = np.isinf(tab.lo) & np.isinf(tab.hi)
    movable = allowed & (tab.hi > tab.lo)
    since_refactor = 0
    while True:
        x = tab.x
        xb = x[tab.basis]
        below = tab.lo[tab.basis] - xb
        above = xb - tab.hi[tab.basis]
        viol = np.maximum(below, above)
        r = int(np.argmax(viol))
        if viol[r] <= tol * max(1.0, abs(xb[r])):
            return OPTIMAL
        if counter[0] >= max_iter:
            return LIMIT
        row = tab.M[r]
        at_hi = np.isfinite(tab.hi) & (x >= tab.hi - tol)
        inc_ok = movable & ~is_basic & (~at_hi | free)
        dec_ok = movable & ~is_basic & (at_hi | free)
        raise_basic = below[r] > 0
        if raise_basic:
            cand = (inc_ok & (row < -PIVOT_TOL)) | (dec_ok & (row > PIVOT_TOL))
        else:
            cand = (inc_ok & (row > PIVOT_TOL)) | (dec_ok & (row < -PIVOT_TOL))
        if not cand.any():
            return INFEASIBLE
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(cand, np.abs(tab.d) / np.abs(row), math.inf)
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        j = int(ties[np.argmax(np.abs(row[ties]))])
        leaving = tab.basis[r]
        counter[0] += 1
        tab.pivot(r, j)
        x[leaving] = tab.lo[leaving] if raise_basic else tab.hi[leaving]
        is_basic[leaving] = False
        is_basic[j] = True
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            tab.refactor()
            since_refactor = 0
        else:
            binv = tab.M[:, nr:nr + m]
            nb = ~is_basic
            x[tab.basis] = binv @ tab.b - tab.M[:, nb] @ x[nb]


def resolve(warm: WarmStart, lb, ub, tol: float = 1e-9, max_iter: int = 200_000) -> LPResult:
    """Re-solve the LP behind ``warm`` with new column bounds ``lb``/``ub``.

    Falls back to a cold :func:`simplex` when the warm basis cannot be reused.
    """
    ctx = warm.ctx
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)

    def cold():
        A, sense, b = ctx.problem
        return simplex(ctx.c, A, sense, b, lb, ub, tol, max_iter)

    if np.any(lb > ub + tol):
        return LPResult(INFEASIBLE, None, math.nan, 0)
    if np.any(lb[ctx.fixed] != ctx.fixed_val) or np.any(ub[ctx.fixed] != ctx.fixed_val):
        return cold()
    nr = ctx.nr
    lo, hi = ctx.lo.copy(), ctx.hi.copy()
    lo[:nr] = lb[ctx.free_cols]
    hi[:nr] = ub[ctx.free_cols]
    x = np.clip(warm.x, lo, hi)
    tab = _Tableau(None, ctx.b, lo, hi, x, warm.basis.copy(), ctx.cost)
    tab.orig = ctx.orig
    try:
        tab.refactor()
    except np.linalg.LinAlgError:
        return cold()
    counter = [0]
    status = _dual(tab, ctx.allowed, nr, tol, max_iter, counter)
    if status == INFEASIBLE:
        return LPResult(INFEASIBLE, None, math.nan, counter[0])
    if status != OPTIMAL:
        return cold()
    tab.refactor()
    status = _iterate(tab, ctx.allowed, tol, max_iter, counter)
    if status != OPTIMAL:
        return cold()
    tab.refactor()
    xb = tab.x[tab.basis]
    if np.any(xb < lo[tab.basis] - 1e-7) or np.any(xb > hi[tab.basis] + 1e-7):
        return cold()
    x_full = np.zeros(len(ctx.c))
    x_full[ctx.fixed] = ctx.fixed_val
    x_full[ctx.free_cols] = np.clip(tab.x[:nr], lo[:nr], hi[:nr])
    return LPResult(OPTIMAL, x_full, float(ctx.c @ x_full), counter[0], WarmStart(ctx, tab.basis.copy(), tab.x.copy()))
