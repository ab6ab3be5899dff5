"""Minimum-cost bipartite assignment with a deterministic tie-break.

The solver is the O(n^3) shortest-augmenting-path algorithm with dual
potentials. Rectangular matrices are padded to square with zero-cost dummy
rows/columns, which leaves the optimal value over real pairs unchanged and
forces a matching of size min(m, n).

Among equal-cost optima the returned matching is canonical: the list of
(row, col) pairs, sorted by row, is lexicographically smallest. Ties are
resolved exactly on the graph of tight edges (zero reduced cost under the
optimal potentials), so repeated runs and platforms agree bit-for-bit.
"""

from __future__ import annotations

import math

import numpy as np


def hungarian_assign(cost) -> list[tuple[int, int]]:
    """Min-cost matching of size min(m, n) for an m x n cost matrix.

    Returns (row, col) pairs sorted by row. Costs must be finite.
    """
    a = np.asarray(cost, dtype=float)
    if a.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    m, n = a.shape
    if m == 0 or n == 0:
        return []
    if not np.isfinite(a).all():
        raise ValueError("cost matrix contains non-finite entries")

    # Fast path: when every row minimum is strict and the argmin columns are
    # all distinct, matching each row to its cheapest column attains the
    # lower bound sum(row minima), so it is the unique optimum and neither
    # the search nor the tie canonicalization below can change it.  (For
    # m > n the same argument applies column-wise.)
    if m <= n:
        cols = _strict_row_minima(a)
        if cols is not None:
            return [(i, int(cols[i])) for i in range(m)]
    else:
        rows = _strict_row_minima(a.T)
        if rows is not None:
            return sorted((int(rows[j]), j) for j in range(n))

    size = max(m, n)
    padded = np.zeros((size, size), dtype=float)
    padded[:m, :n] = a

    u, v, row_to_col = _solve_square(padded)
    _canonicalize(padded, u, v, row_to_col, m, n)
    return sorted((i, row_to_col[i]) for i in range(m) if row_to_col[i] < n)


def _strict_row_minima(a: np.ndarray):
    """Per-row argmin columns, or None unless each row's minimum is attained
    at exactly one column and no two rows share that column."""
    cols = np.argmin(a, axis=1)
    mins = a[np.arange(a.shape[0]), cols]
    if np.any(np.count_nonzero(a == mins[:, None], axis=1) != 1):
        return None
    if np.unique(cols).size != a.shape[0]:
        return None
    return cols


def assignment_cost(cost, pairs) -> float:
    """Total cost of a matching, summed in row order (deterministic)."""
    a = np.asarray(cost, dtype=float)
    total = 0.0
    for i, j in sorted(pairs):
        total += float(a[i, j])
    return total


def _solve_square(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Shortest-augmenting-path solve of a square matrix.

    Returns dual potentials (u, v) with u[i] + v[j] <= a[i][j] everywhere and
    equality on matched edges, plus the matched column of each row.
    """
    n = a.shape[0]
    INF = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = [0] * (n + 1)  # col -> row (1-based); col 0 is the virtual start
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = a[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return np.asarray(u[1:]), np.asarray(v[1:]), row_to_col


def _canonicalize(a, u, v, row_to_col, m, n) -> None:
    """Rewire an optimal matching in place to the lexicographically-smallest
    optimum.

    Works on tight edges only, so every candidate matching keeps the optimal
    total. Real rows are fixed in index order to their smallest feasible
    column (ascending order puts real columns before dummy ones); feasibility
    is checked by attempting an augmenting-path rewire, a no-op in the common
    unique-optimum case.
    """
    size = a.shape[0]
    eps = 1e-9 * max(1.0, float(np.abs(a).max()))
    tight = (a - u[:, None] - v[None, :]) <= eps
    for i, j in enumerate(row_to_col):
        tight[i, j] = True  # guard against float noise on matched edges
    tight_cols = [np.flatnonzero(tight[i]).tolist() for i in range(size)]

    col_to_row = [-1] * size
    for i, j in enumerate(row_to_col):
        col_to_row[j] = i
    locked_col = [False] * size

    for i in range(m):
        for j in tight_cols[i]:
            if locked_col[j]:
                continue
            if row_to_col[i] == j or _force_edge(
                tight_cols, row_to_col, col_to_row, locked_col, i, j, size
            ):
                locked_col[j] = True
                break


def _force_edge(tight_cols, row_to_col, col_to_row, locked_col, i, j, size) -> bool:
    """Try to include edge (i, j); True on success, state untouched on failure."""
    old_col = row_to_col[i]
    old_row = col_to_row[j]
    row_to_col[i] = j
    col_to_row[j] = i
    row_to_col[old_row] = -1
    col_to_row[old_col] = -1
    visited = [False] * size
    visited[j] = True
    if _augment(tight_cols, row_to_col, col_to_row, locked_col, old_row, visited):
        return True
    row_to_col[i] = old_col
    col_to_row[old_col] = i
    row_to_col[old_row] = j
    col_to_row[j] = old_row
    return False


def _augment(tight_cols, row_to_col, col_to_row, locked_col, row, visited) -> bool:
    """Kuhn augmenting path; mutates the matching only when a path is found."""
    for j in tight_cols[row]:
        if visited[j] or locked_col[j]:
            continue
        visited[j] = True
        other = col_to_row[j]
        if other == -1 or _augment(
            tight_cols, row_to_col, col_to_row, locked_col, other, visited
        ):
            row_to_col[row] = j
            col_to_row[j] = row
            return True
    return False
