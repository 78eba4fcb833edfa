"""Exact rectangular linear assignment (shortest augmenting path with potentials)."""
import math

from .errors import DomainError, ShapeError


def _as_rows(cost):
    rows = [list(map(float, r)) for r in cost]
    if rows:
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ShapeError("cost matrix rows have different lengths")
    return rows


def solve(cost):
    """Minimum-cost injective assignment of rows to columns.

    ``cost`` is any 2-D sequence (lists or a numpy array) with
    ``rows <= cols``.  Returns ``(assignment, total)`` where
    ``assignment[i]`` is the column given to row ``i``.

    Rows are inserted one at a time; each insertion grows a Dijkstra-style
    shortest path tree over reduced costs ``c[i][j] - u[i] - v[j]`` until it
    reaches a free column, then flips the path.  Columns are scanned in
    ascending order with strict comparisons, so ties always resolve the same
    way.  O(rows^2 * cols).
    """
    c = _as_rows(cost)
    n = len(c)
    if n == 0:
        return [], 0.0
    m = len(c[0])
    if n > m:
        raise ShapeError(f"{n} rows but only {m} columns")
    for r in c:
        for x in r:
            if not math.isfinite(x):
                raise DomainError("cost matrix has a non-finite entry")

    inf = math.inf
    # 1-based; column 0 is the virtual source of each augmenting search
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    owner = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            row = c[i0 - 1]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    assignment = [0] * n
    for j in range(1, m + 1):
        if owner[j]:
            assignment[owner[j] - 1] = j - 1
    total = sum(c[i][assignment[i]] for i in range(n))
    return assignment, total


def brute_force(cost):
    """Exhaustive minimum over injective row->column maps; test oracle only."""
    from itertools import permutations

    c = _as_rows(cost)
    n = len(c)
    if n == 0:
        return [], 0.0
    m = len(c[0])
    best = None
    for cols in permutations(range(m), n):
        total = sum(c[i][j] for i, j in enumerate(cols))
        if best is None or total < best[1]:
            best = (list(cols), total)
    return best
