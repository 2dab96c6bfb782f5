"""Minimum-weight full bipartite matching (assignment problem).

Shortest-augmenting-path Hungarian method, O(n^2 m) for an n x m matrix with
n <= m.  Infinite entries are forbidden edges.  To make the optimum unique the
weights are mapped to exact integers and perturbed so that, among optimal
assignments, the one whose column sequence (read by row) is lexicographically
smallest wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

INF = math.inf


class InfeasibleMatchingError(ValueError):
    """No full matching of the smaller side uses only finite edges.

    ``rows`` holds indices (on the smaller side, see ``side``) of a set of
    elements whose finite neighbourhood is too small to be matched.
    """

    def __init__(self, rows: Sequence[int], side: str = "rows"):
        self.rows = tuple(rows)
        self.side = side
        super().__init__(f"no finite-cost full matching; blocking {side}: {list(self.rows)}")


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    cost: float


def _to_exact_ints(weights: list[list[float]]) -> list[list[int | float]]:
    if all(type(w) is int or w == INF for row in weights for w in row):
        if any(w < 0 for row in weights for w in row):
            raise ValueError("weights must be nonnegative or inf")
        return weights
    finite = [w for row in weights for w in row if w != INF]
    for w in finite:
        if w < 0 or w != w:
            raise ValueError(f"weights must be nonnegative or inf, got {w!r}")
    if all(isinstance(w, int) or float(w).is_integer() for w in finite):
        return [[w if w == INF else int(w) for w in row] for row in weights]
    fracs = {w: Fraction(w) for w in finite}
    scale = math.lcm(*(f.denominator for f in fracs.values()))
    return [[w if w == INF else int(fracs[w] * scale) for w in row] for row in weights]


def _hungarian(a: list[list[int | float]], n: int, m: int) -> list[int]:
    """Assign each of the n rows a distinct column (n <= m); returns row -> column."""
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row matched to column j (1-based, 0 = free)
    way = [0] * (m + 1)
    cols = range(1, m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = INF
            j1 = 0
            for j in cols:
                if not used[j]:
                    w = row[j - 1]
                    if w != INF:
                        cur = w - ui0 - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            if delta == INF:
                raise InfeasibleMatchingError(sorted(p[j] - 1 for j in range(m + 1) if used[j]))
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = [0] * n
    for j in cols:
        if p[j]:
            assignment[p[j] - 1] = j - 1
    return assignment


def _enumerate(a: list[list[int | float]], n: int, m: int) -> list[int] | None:
    """Exhaustive search for tiny matrices; permutations come in lexicographic order."""
    best, best_cost = None, INF
    for perm in permutations(range(m), n):
        c = 0
        for i in range(n):
            c += a[i][perm[i]]
        if c < best_cost:
            best, best_cost = perm, c
    return list(best) if best is not None else None


def assign_square(a: list[list[int | float]]) -> list[int] | None:
    """Row -> column optimum of a square matrix of nonnegative ints (or inf).

    Same optimum and tie-breaking as ``min_weight_full_match`` without input
    checks; returns ``None`` when infeasible.
    """
    n = len(a)
    if n <= 4:
        return _enumerate(a, n, n)
    try:
        return _hungarian(_perturb(a, n, n), n, n)
    except InfeasibleMatchingError:
        return None


def _perturb(exact: list[list[int | float]], n: int, m: int) -> list[list[int | float]]:
    # unique optimum: ties go to the lexicographically smallest column sequence
    digits = [m ** (n - 1 - i) for i in range(n)]
    scale = m ** n
    return [
        [w if w == INF else w * scale + j * digits[i] for j, w in enumerate(row)]
        for i, row in enumerate(exact)
    ]


def min_weight_full_match(weights: Sequence[Sequence[float]]) -> Matching:
    """Minimum-weight matching covering every element of the smaller side.

    ``weights[i][j]`` is the cost of pairing left element ``i`` with right
    element ``j``; ``math.inf`` forbids the pair.  Pairs are returned as
    ``(left, right)`` sorted by the smaller side's index.

    Raises ``InfeasibleMatchingError`` if no finite full matching exists.
    """
    rows = [list(r) for r in weights]
    if not rows or not rows[0]:
        raise ValueError("weight matrix must be non-empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("weight matrix must be rectangular")

    transposed = len(rows) > width
    work = [list(col) for col in zip(*rows)] if transposed else rows
    n, m = len(work), len(work[0])

    exact = _to_exact_ints(work)
    if m <= 3:
        assignment = _enumerate(exact, n, m)
        if assignment is not None:
            return _finish(rows, assignment, transposed)
    try:
        assignment = _hungarian(_perturb(exact, n, m), n, m)
    except InfeasibleMatchingError as exc:
        raise InfeasibleMatchingError(exc.rows, "columns" if transposed else "rows") from None
    return _finish(rows, assignment, transposed)


def _finish(rows: list[list[float]], assignment: list[int], transposed: bool) -> Matching:
    if transposed:
        pairs = tuple((j, i) for i, j in enumerate(assignment))
    else:
        pairs = tuple(enumerate(assignment))
    cost = sum(rows[i][j] for i, j in pairs)
    return Matching(pairs, cost)
