"""Exact graph edit distance between two ABox components.

Depth-first branch and bound over node mappings.  Nodes of the first graph
are visited in id order and either mapped to an unused node of the second
graph or deleted; second-graph nodes left over at the end are inserted.
Costs reuse the set-level rules: a node substitution costs the label-set edit
distance of the two concept labels, an edge substitution the edit distance of
the two role labels, deletions and insertions the sum of member distances to
``TOP``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .costs import INF, Atom, CostModel, concept, role
from .kb import ABoxComponent
from .matching import InfeasibleMatchingError, min_weight_full_match
from .setdist import EditOp, EditPath, SetEditDistance

DEFAULT_NODE_BUDGET = 10


class GedBudgetError(ValueError):
    def __init__(self, limit: int, sizes: tuple[int, int]):
        self.limit = limit
        self.sizes = sizes
        super().__init__(f"component sizes {sizes} exceed the node budget of {limit}")


@dataclass(frozen=True)
class GraphEditOp:
    kind: str  # node-substitute | node-delete | node-insert | edge-substitute | edge-delete | edge-insert
    source: object  # node id, (subject, object) edge, or None for insertions
    target: object  # likewise, None for deletions
    cost: float
    edits: tuple[EditOp, ...] = ()

    def __str__(self) -> str:
        inner = ", ".join(str(e) for e in self.edits)
        return f"{self.kind}({self.source} -> {self.target}: {inner})"


@dataclass(frozen=True)
class GedResult:
    cost: float
    ops: tuple[GraphEditOp, ...]
    mapping: tuple[tuple[str, str | None], ...]
    optimal: bool = True

    def to_edit_path(self, source: str, target: str) -> EditPath:
        ops = tuple(e for op in self.ops for e in op.edits)
        return EditPath(source, target, ops, sum(e.cost for e in ops))


def _site(x) -> str | None:
    if x is None:
        return None
    if isinstance(x, tuple):
        return f"{x[0]}->{x[1]}"
    return x


class _Problem:
    def __init__(self, cm: CostModel, a: ABoxComponent, b: ABoxComponent):
        self.sed = SetEditDistance(cm)
        self.a_nodes = list(a.nodes)
        self.b_nodes = list(b.nodes)
        self.a_labels = [frozenset(concept(c) for c in a.node_labels[n]) for n in self.a_nodes]
        self.b_labels = [frozenset(concept(c) for c in b.node_labels[n]) for n in self.b_nodes]
        ai = {n: i for i, n in enumerate(self.a_nodes)}
        bi = {n: i for i, n in enumerate(self.b_nodes)}
        self.a_edges = {(ai[s], ai[t]): frozenset(role(r) for r in labels) for (s, t), labels in a.edge_labels.items()}
        self.b_edges = {(bi[s], bi[t]): frozenset(role(r) for r in labels) for (s, t), labels in b.edge_labels.items()}
        empty: frozenset[Atom] = frozenset()
        lab = self.sed._label
        self.node_sub = [[lab(x, y)[0] for y in self.b_labels] for x in self.a_labels]
        self.node_del = [lab(x, empty)[0] for x in self.a_labels]
        self.node_ins = [lab(empty, y)[0] for y in self.b_labels]
        self.edge_del = {e: lab(l, empty)[0] for e, l in self.a_edges.items()}
        self.edge_ins = {e: lab(empty, l)[0] for e, l in self.b_edges.items()}

    def edge_sub(self, ea, eb) -> float:
        return self.sed._label(self.a_edges[ea], self.b_edges[eb])[0]

    def step_cost(self, mapping: list[int | None], k: int) -> float:
        """Cost added by fixing node k's image, given images of nodes 0..k-1."""
        t = mapping[k]
        cost = self.node_sub[k][t] if t is not None else self.node_del[k]
        a_edges, b_edges = self.a_edges, self.b_edges
        for j in range(k + 1):
            pairs = ((k, j), (j, k)) if j != k else ((k, k),)
            for x, y in pairs:
                fx, fy = mapping[x], mapping[y]
                a_has = (x, y) in a_edges
                b_has = fx is not None and fy is not None and (fx, fy) in b_edges
                if a_has and b_has:
                    cost += self.edge_sub((x, y), (fx, fy))
                elif a_has:
                    cost += self.edge_del[(x, y)]
                elif b_has:
                    cost += self.edge_ins[(fx, fy)]
        return cost

    def completion_cost(self, mapping: list[int | None]) -> float:
        used = {t for t in mapping if t is not None}
        cost = sum(self.node_ins[v] for v in range(len(self.b_nodes)) if v not in used)
        cost += sum(c for (s, t), c in self.edge_ins.items() if s not in used or t not in used)
        return cost

    def lower_bound(self, k: int, used: set[int]) -> float:
        """Node-only assignment bound for nodes k.. of A against unused nodes of B."""
        rem_a = range(k, len(self.a_nodes))
        rem_b = [v for v in range(len(self.b_nodes)) if v not in used]
        ra, rb = len(rem_a), len(rem_b)
        if ra == 0:
            return sum(self.node_ins[v] for v in rem_b)
        if rb == 0:
            return sum(self.node_del[u] for u in rem_a)
        size = ra + rb
        w = [[INF] * size for _ in range(size)]
        for i, u in enumerate(rem_a):
            row = w[i]
            for j, v in enumerate(rem_b):
                row[j] = self.node_sub[u][v]
            row[rb + i] = self.node_del[u]
        for j, v in enumerate(rem_b):
            w[ra + j][j] = self.node_ins[v]
            for i in range(ra):
                w[ra + j][rb + i] = 0
        try:
            return min_weight_full_match(w).cost
        except InfeasibleMatchingError:
            return INF


def exact_ged(
    cm: CostModel,
    a: ABoxComponent,
    b: ABoxComponent,
    node_budget: int = DEFAULT_NODE_BUDGET,
    timeout: float | None = None,
    use_bound: bool = True,
) -> GedResult:
    """Minimum-cost edit script turning component *a* into component *b*.

    Raises ``GedBudgetError`` when either component has more than
    *node_budget* nodes.  If *timeout* (seconds) expires the best script
    found so far is returned with ``optimal=False``.
    """
    sizes = (len(a.nodes), len(b.nodes))
    if max(sizes) > node_budget:
        raise GedBudgetError(node_budget, sizes)
    prob = _Problem(cm, a, b)
    n, m = sizes
    deadline = None if timeout is None else time.monotonic() + timeout

    # greedy upper bound
    mapping: list[int | None] = [None] * n
    used: set[int] = set()
    g = 0
    for k in range(n):
        best_t, best_c = None, INF
        for t in [v for v in range(m) if v not in used] + [None]:
            mapping[k] = t
            c = prob.step_cost(mapping, k)
            if c < best_c:
                best_t, best_c = t, c
        mapping[k] = best_t
        g += best_c
        if best_t is not None:
            used.add(best_t)
    best_cost = g + prob.completion_cost(mapping)
    best_map = list(mapping)

    timed_out = False
    expansions = 0
    mapping = [None] * n
    used = set()

    def dfs(k: int, g: float) -> None:
        nonlocal best_cost, best_map, timed_out, expansions
        if timed_out:
            return
        expansions += 1
        if deadline is not None and expansions % 256 == 0 and time.monotonic() > deadline:
            timed_out = True
            return
        if k == n:
            total = g + prob.completion_cost(mapping)
            if total < best_cost:
                best_cost, best_map = total, list(mapping)
            return
        if use_bound and g + prob.lower_bound(k, used) >= best_cost:
            return
        for t in [v for v in range(m) if v not in used] + [None]:
            mapping[k] = t
            c = g + prob.step_cost(mapping, k)
            if not use_bound or c < best_cost:
                if t is not None:
                    used.add(t)
                dfs(k + 1, c)
                if t is not None:
                    used.discard(t)
            mapping[k] = None

    dfs(0, 0)
    return _result(prob, best_map, best_cost, not timed_out)


def _result(prob: _Problem, mapping: list[int | None], cost: float, optimal: bool) -> GedResult:
    sed = prob.sed
    an, bn = prob.a_nodes, prob.b_nodes
    ops: list[GraphEditOp] = []
    empty: frozenset[Atom] = frozenset()

    def edits(x: frozenset, y: frozenset, site, tsite) -> tuple[EditOp, ...]:
        return tuple(sed.label_distance(x, y, _site(site), _site(tsite))[1])

    for u, t in enumerate(mapping):
        if t is None:
            ops.append(GraphEditOp("node-delete", an[u], None, prob.node_del[u],
                                   edits(prob.a_labels[u], empty, an[u], None)))
        elif prob.node_sub[u][t] or prob.a_labels[u] != prob.b_labels[t]:
            ops.append(GraphEditOp("node-substitute", an[u], bn[t], prob.node_sub[u][t],
                                   edits(prob.a_labels[u], prob.b_labels[t], an[u], bn[t])))
    used = {t for t in mapping if t is not None}
    for v in range(len(bn)):
        if v not in used:
            ops.append(GraphEditOp("node-insert", None, bn[v], prob.node_ins[v],
                                   edits(empty, prob.b_labels[v], None, bn[v])))
    image = set()
    for (x, y), labels in sorted(prob.a_edges.items()):
        fx, fy = mapping[x], mapping[y]
        ea = (an[x], an[y])
        if fx is not None and fy is not None and (fx, fy) in prob.b_edges:
            image.add((fx, fy))
            eb = (bn[fx], bn[fy])
            if labels != prob.b_edges[(fx, fy)]:
                ops.append(GraphEditOp("edge-substitute", ea, eb, prob.edge_sub((x, y), (fx, fy)),
                                       edits(labels, prob.b_edges[(fx, fy)], ea, eb)))
        else:
            ops.append(GraphEditOp("edge-delete", ea, None, prob.edge_del[(x, y)], edits(labels, empty, ea, None)))
    for (s, t), labels in sorted(prob.b_edges.items()):
        if (s, t) not in image:
            eb = (bn[s], bn[t])
            ops.append(GraphEditOp("edge-insert", None, eb, prob.edge_ins[(s, t)], edits(empty, labels, None, eb)))
    node_map = tuple((an[u], bn[t] if t is not None else None) for u, t in enumerate(mapping))
    return GedResult(cost, tuple(ops), node_map, optimal)
