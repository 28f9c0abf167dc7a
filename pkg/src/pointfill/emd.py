"""Minimum-cost perfect matching between equal-size point sets.

``hungarian`` is the exact O(n^3) shortest-augmenting-path method with
row/column potentials (Kuhn-Munkres in the Jonker-Volgenant form). It
returns the dual potentials, so callers can verify optimality: a matching
is optimal iff ``u[i] + v[j] <= cost[i, j]`` everywhere with equality on the
matched pairs (complementary slackness).

``auction`` is Bertsekas' forward auction with epsilon scaling, used above
``EXACT_LIMIT`` points. Its final assignment is within ``n * eps`` of the
optimal total cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXACT_LIMIT = 1024
AUCTION_FINAL_EPS = 1e-6


@dataclass(frozen=True)
class Assignment:
    cols: np.ndarray  # cols[i] = column matched to row i
    total: float
    row_dual: np.ndarray | None = None
    col_dual: np.ndarray | None = None
    exact: bool = True
    eps: float = 0.0


def hungarian(cost) -> Assignment:
    """Exact minimum-cost assignment for a square cost matrix."""
    c = np.asarray(cost, dtype=np.float64)
    n = c.shape[0]
    if c.ndim != 2 or c.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return Assignment(np.zeros(0, np.int64), 0.0, np.zeros(0), np.zeros(0))
    inf = np.inf
    # 1-based arrays with a virtual column 0, as in the classic formulation.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match_row = np.zeros(n + 1, dtype=np.int64)  # match_row[j] = row assigned to column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            cur = c[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            # dual update: tree rows gain delta, tree columns lose it
            tree_cols = np.nonzero(used)[0]
            u[match_row[tree_cols]] += delta
            v[tree_cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_row[j0] = match_row[j1]
            j0 = j1
    cols = np.empty(n, dtype=np.int64)
    cols[match_row[1:] - 1] = np.arange(n)
    total = float(c[np.arange(n), cols].sum())
    # v[0] absorbs the bookkeeping of the virtual column and is not a dual.
    return Assignment(cols, total, u[1:].copy(), v[1:].copy(), exact=True)


def auction(cost, final_eps: float = AUCTION_FINAL_EPS) -> Assignment:
    """Approximate minimum-cost assignment via epsilon-scaled auction.

    Rows bid for columns on the benefit ``-cost``. Epsilon starts at a
    quarter of the cost range and is divided by 5 until ``final_eps``.
    """
    c = np.asarray(cost, dtype=np.float64)
    n = c.shape[0]
    if c.ndim != 2 or c.shape[1] != n:
        raise ValueError("cost matrix must be square")
    benefit = -c
    prices = np.zeros(n)
    spread = float(c.max() - c.min()) if n else 0.0
    eps = max(spread / 4.0, final_eps)
    owner = np.full(n, -1, dtype=np.int64)
    while True:
        owner[:] = -1
        assigned = np.full(n, -1, dtype=np.int64)
        unassigned = list(range(n))
        while unassigned:
            rows = np.asarray(unassigned, dtype=np.int64)
            values = benefit[rows] - prices[None, :]
            best = np.argmax(values, axis=1)
            best_val = values[np.arange(len(rows)), best]
            values[np.arange(len(rows)), best] = -np.inf
            second = values.max(axis=1) if n > 1 else best_val
            bids = prices[best] + (best_val - second) + eps
            # resolve competing bids: highest bid wins, lowest row index on ties
            order = np.lexsort((rows, -bids, best))
            nxt = []
            last_col = -1
            for k in order:
                col = int(best[k])
                row = int(rows[k])
                if col == last_col:
                    nxt.append(row)
                    continue
                last_col = col
                prev = owner[col]
                if prev >= 0:
                    assigned[prev] = -1
                    nxt.append(int(prev))
                owner[col] = row
                assigned[row] = col
                prices[col] = bids[k]
            unassigned = sorted(nxt)
        if eps <= final_eps:
            break
        eps = max(eps / 5.0, final_eps)
    total = float(c[np.arange(n), assigned].sum())
    return Assignment(assigned, total, exact=False, eps=eps)


def solve(cost, exact_limit: int = EXACT_LIMIT) -> Assignment:
    c = np.asarray(cost, dtype=np.float64)
    if c.shape[0] <= exact_limit:
        return hungarian(c)
    return auction(c)


def check_optimality(cost, result: Assignment, tol: float = 1e-9) -> bool:
    """Feasibility plus complementary slackness of an exact assignment."""
    c = np.asarray(cost, dtype=np.float64)
    n = c.shape[0]
    if result.row_dual is None or result.col_dual is None:
        return False
    if sorted(result.cols.tolist()) != list(range(n)):
        return False
    scale = max(1.0, float(np.abs(c).max()) if n else 1.0)
    reduced = c - result.row_dual[:, None] - result.col_dual[None, :]
    if reduced.min() < -tol * scale:
        return False
    tight = reduced[np.arange(n), result.cols]
    if np.abs(tight).max(initial=0.0) > tol * scale:
        return False
    dual_obj = float(result.row_dual.sum() + result.col_dual.sum())
    return abs(dual_obj - result.total) <= tol * scale * max(1, n)
