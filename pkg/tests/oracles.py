"""Brute-force reference implementations used as test oracles.

They share no code with the engine beyond ``CostModel.edit_cost`` for single
atom pairs, and enumerate every candidate directly.
"""

from __future__ import annotations

import math
from collections import deque
from functools import lru_cache
from itertools import permutations

from semcf.costs import INF, TOP_ATOM, concept, role


def brute_matching(weights):
    """Minimum over all injections of the smaller side into the larger."""
    n, m = len(weights), len(weights[0])
    best = INF
    if n <= m:
        for perm in permutations(range(m), n):
            best = min(best, sum(weights[i][perm[i]] for i in range(n)))
    else:
        for perm in permutations(range(n), m):
            best = min(best, sum(weights[perm[j]][j] for j in range(m)))
    return best


def floyd_warshall(graph) -> dict[tuple[str, str], float]:
    nodes = sorted(graph.nodes)
    d = {(a, b): (0 if a == b else INF) for a in nodes for b in nodes}
    for a, b in graph.edges:
        d[a, b] = d[b, a] = 1
    for k in nodes:
        for i in nodes:
            dik = d[i, k]
            if dik == INF:
                continue
            for j in nodes:
                if dik + d[k, j] < d[i, j]:
                    d[i, j] = dik + d[k, j]
    return d


def bfs_distance(graph, x: str, y: str) -> float:
    adj = {n: set() for n in graph.nodes}
    for a, b in graph.edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {x: 0}
    queue = deque([x])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in seen:
                seen[m] = seen[n] + 1
                queue.append(m)
    return seen.get(y, INF)


def _partial_injections(n: int, m: int):
    """Every map from range(n) to range(m) + [None], injective on the non-None images."""
    def rec(i, used, acc):
        if i == n:
            yield tuple(acc)
            return
        acc.append(None)
        yield from rec(i + 1, used, acc)
        acc.pop()
        for j in range(m):
            if j not in used:
                used.add(j)
                acc.append(j)
                yield from rec(i + 1, used, acc)
                acc.pop()
                used.discard(j)
    yield from rec(0, set(), [])


class BruteSetDistance:
    """Two-level set edit distance by enumerating all partial matchings at both levels."""

    def __init__(self, cm):
        self.cm = cm
        self.label = lru_cache(maxsize=None)(self._label)

    def _cost(self, x, y) -> float:
        return 0 if x == y else self.cm.edit_cost(x, y)

    def _label(self, a: frozenset, b: frozenset) -> float:
        la, lb = sorted(a, key=str), sorted(b, key=str)
        top = TOP_ATOM
        best = INF
        for f in _partial_injections(len(la), len(lb)):
            c = 0
            for i, j in enumerate(f):
                c += self._cost(la[i], top) if j is None else self._cost(la[i], lb[j])
            used = {j for j in f if j is not None}
            c += sum(self._cost(top, lb[j]) for j in range(len(lb)) if j not in used)
            best = min(best, c)
        return best

    def description(self, a_labels, b_labels) -> float:
        empty = frozenset()
        best = INF
        for f in _partial_injections(len(a_labels), len(b_labels)):
            c = 0
            for i, j in enumerate(f):
                c += self.label(a_labels[i], empty if j is None else b_labels[j])
            used = {j for j in f if j is not None}
            c += sum(self.label(empty, b_labels[j]) for j in range(len(b_labels)) if j not in used)
            best = min(best, c)
        return best


def brute_ged(cm, a, b) -> float:
    """Graph edit distance by enumerating every partial injective node mapping."""
    sd = BruteSetDistance(cm)
    empty = frozenset()
    an, bn = list(a.nodes), list(b.nodes)
    al = [frozenset(concept(c) for c in a.node_labels[n]) for n in an]
    bl = [frozenset(concept(c) for c in b.node_labels[n]) for n in bn]
    ai = {n: i for i, n in enumerate(an)}
    bi = {n: i for i, n in enumerate(bn)}
    ae = {(ai[s], ai[t]): frozenset(role(r) for r in l) for (s, t), l in a.edge_labels.items()}
    be = {(bi[s], bi[t]): frozenset(role(r) for r in l) for (s, t), l in b.edge_labels.items()}
    best = INF
    for f in _partial_injections(len(an), len(bn)):
        c = 0
        for u, t in enumerate(f):
            c += sd.label(al[u], empty if t is None else bl[t])
        used = {t for t in f if t is not None}
        c += sum(sd.label(empty, bl[v]) for v in range(len(bn)) if v not in used)
        image = set()
        for (x, y), labels in ae.items():
            fx, fy = f[x], f[y]
            if fx is not None and fy is not None and (fx, fy) in be:
                image.add((fx, fy))
                c += sd.label(labels, be[fx, fy])
            else:
                c += sd.label(labels, empty)
        c += sum(sd.label(empty, labels) for e, labels in be.items() if e not in image)
        best = min(best, c)
    return best


def finite(x) -> bool:
    return not math.isinf(x)
