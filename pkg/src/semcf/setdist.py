"""Two-level set edit distance between concept-set descriptions.

Inner level: two label sets are aligned by a minimum-weight full matching in
which the smaller side is padded with ``TOP`` (so unmatched members become
insertions or deletions).  Outer level: the same construction over labels,
weighted by inner distances, with empty labels as padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .costs import INF, TOP, TOP_ATOM, Atom, CostModel, parse_atom
from .matching import InfeasibleMatchingError, assign_square, min_weight_full_match
from .rollup import ConceptSetDescription, LabelSet


class InconsistentPathError(ValueError):
    pass


class _EditOpFields(NamedTuple):
    src: Atom
    dst: Atom
    cost: float
    site: str | None = None
    target_site: str | None = None


class EditOp(_EditOpFields):
    """Replace ``src`` with ``dst``; ``TOP`` on either side encodes insertion/deletion.

    ``site`` is the source label (individual) the op applies to, ``None`` for
    an inserted label; ``target_site`` is the label it ends up in, ``None``
    for a deleted label.
    """

    __slots__ = ()

    def __new__(cls, src: Atom, dst: Atom, cost: float, site: str | None = None, target_site: str | None = None):
        if src.is_top and dst.is_top:
            raise ValueError("TOP -> TOP is not an edit")
        return tuple.__new__(cls, (src, dst, cost, site, target_site))

    @property
    def kind(self) -> str:
        if self.src.is_top:
            return "insert"
        if self.dst.is_top:
            return "delete"
        return "replace"

    def __str__(self) -> str:
        return f"{self.src.pretty()}→{self.dst.pretty()}"

    def reversed(self) -> EditOp:
        return EditOp(self.dst, self.src, self.cost, self.target_site, self.site)

    def to_record(self) -> list:
        return [str(self.src), str(self.dst), _cost_out(self.cost), self.site, self.target_site]

    @classmethod
    def from_record(cls, rec: list, kinds=None) -> EditOp:
        src, dst, cost, site, tsite = rec
        return cls(parse_atom(src, kinds), parse_atom(dst, kinds), _cost_in(cost), site, tsite)


@dataclass(frozen=True)
class EditPath:
    source: str
    target: str
    ops: tuple[EditOp, ...]
    total_cost: float
    # (source site | None, target site | None) for every aligned label pair
    alignment: tuple[tuple[str | None, str | None], ...] = ()

    @classmethod
    def build(cls, source: str, target: str, ops: Iterable[EditOp], alignment=()) -> EditPath:
        ops = tuple(ops)
        return cls(source, target, ops, sum(op.cost for op in ops), tuple(alignment))

    def reversed(self) -> EditPath:
        return EditPath(self.target, self.source, tuple(op.reversed() for op in self.ops), self.total_cost,
                        tuple((t, s) for s, t in self.alignment))

    def to_record(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "cost": _cost_out(self.total_cost),
            "ops": [op.to_record() for op in self.ops],
            "alignment": [list(p) for p in self.alignment],
        }

    @classmethod
    def from_record(cls, rec: dict, kinds=None) -> EditPath:
        return cls(
            rec["source"],
            rec["target"],
            tuple(EditOp.from_record(o, kinds) for o in rec["ops"]),
            _cost_in(rec["cost"]),
            tuple((s, t) for s, t in rec["alignment"]),
        )


_new_op = tuple.__new__
_EditOp = EditOp


def _cost_out(c: float):
    return "inf" if c == INF else c


def _cost_in(c) -> float:
    return INF if c == "inf" else c


_TOP, _CONCEPT, _ROLE, _EXISTS = range(4)
_KIND_CODES = {"top": _TOP, "concept": _CONCEPT, "role": _ROLE, "exists": _EXISTS}
_MIXED = {(_CONCEPT, _EXISTS), (_EXISTS, _CONCEPT)}


class SetEditDistance:
    """Set edit distance under one cost model, memoizing label-pair results."""

    def __init__(self, cm: CostModel, memo_limit: int = 200_000):
        self.cm = cm
        self._memo: dict[tuple[frozenset, frozenset], tuple[float, tuple]] = {}
        self._memo_limit = memo_limit
        # atoms are interned to small ints (id 0 is TOP) with precomputed
        # distance rows, so that pricing a pair is a couple of lookups
        self._atoms: list[Atom] = []
        self._ids: dict[Atom, int] = {}
        self._kind: list[int] = []
        self._name: list[str] = []
        self._filler: list[str | None] = []
        self._row: list[dict] = []
        self._filler_row: list[dict | None] = []
        self._del: list[float] = []
        self._ins: list[float] = []
        self._encoded: dict[frozenset, tuple[int, ...]] = {}
        self._intern(TOP_ATOM)

    def _intern(self, atom: Atom) -> int:
        i = self._ids.get(atom)
        if i is not None:
            return i
        cm = self.cm
        kind = _KIND_CODES[atom.kind]
        name = TOP if kind == _TOP else atom.name
        cm.atom_distance(name, name)  # rejects unknown names
        if kind == _EXISTS:
            cm.atom_distance(atom.filler, atom.filler)
        i = self._ids[atom] = len(self._atoms)
        self._atoms.append(atom)
        self._kind.append(kind)
        self._name.append(name)
        self._filler.append(atom.filler)
        self._row.append(cm._distances_from(name))
        self._filler_row.append(cm._distances_from(atom.filler) if kind == _EXISTS else None)
        self._del.append(0 if kind == _TOP else cm.edit_cost(atom, TOP_ATOM))
        self._ins.append(0 if kind == _TOP else cm.edit_cost(TOP_ATOM, atom))
        return i

    def _encode(self, s: frozenset[Atom]) -> tuple[int, ...]:
        out = self._encoded.get(s)
        if out is None:
            out = self._encoded[s] = tuple(self._intern(atom) for atom in sorted(s, key=str))
        return out

    def _cost(self, x: int, y: int) -> float:
        """``cm.edit_cost`` on interned atoms."""
        if x == y:
            return 0
        overrides = self.cm.overrides
        if overrides:
            o = overrides.get((self._atoms[x], self._atoms[y]))
            if o is not None:
                return o
        kx, ky = self._kind[x], self._kind[y]
        if ky == _TOP:
            return self._del[x]
        if kx == _TOP:
            return self._ins[y]
        if kx == ky:
            d = self._row[x].get(self._name[y], INF)
            if kx == _EXISTS:
                d += self._filler_row[x].get(self._filler[y], INF)
            return d
        if (kx, ky) in _MIXED:
            return self._del[x] + self._ins[y]
        return self.cm.edit_cost(self._atoms[x], self._atoms[y])  # raises KindMismatchError

    def _label(self, a: frozenset[Atom], b: frozenset[Atom]) -> tuple[float, tuple[tuple[Atom, Atom, float], ...]]:
        key = (a, b)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        result = self._solve_label(a, b)
        if len(self._memo) < self._memo_limit:
            self._memo[key] = result
        return result

    def _solve_label(self, a: frozenset[Atom], b: frozenset[Atom]):
        if a == b:
            return 0, ()
        left = self._encode(a)
        right = self._encode(b)
        cost, atoms = self._cost, self._atoms
        if not right:
            ops = tuple((atoms[x], TOP_ATOM, cost(x, 0)) for x in left)
            return sum(c for _, _, c in ops), ops
        if not left:
            ops = tuple((TOP_ATOM, atoms[y], cost(0, y)) for y in right)
            return sum(c for _, _, c in ops), ops
        n = max(len(left), len(right))
        if n == 1:
            x, y = left[0], right[0]
            c = cost(x, y)
            return (c, ((atoms[x], atoms[y], c),)) if c != INF else (INF, None)
        if len(left) < n:
            left += (0,) * (n - len(left))
        if len(right) < n:
            right += (0,) * (n - len(right))
        weights = []
        exact = True
        for x in left:
            row = []
            for y in right:
                c = cost(x, y)
                if type(c) is not int and c != INF:
                    exact = False
                row.append(c)
            weights.append(row)
        if not exact:
            try:
                pairs = min_weight_full_match(weights).pairs
            except InfeasibleMatchingError:
                return INF, None
        elif n == 2:
            (w00, w01), (w10, w11) = weights
            straight, crossed = w00 + w11, w01 + w10
            if straight == INF and crossed == INF:
                return INF, None
            pairs = ((0, 0), (1, 1)) if straight <= crossed else ((0, 1), (1, 0))
        else:
            assignment = assign_square(weights)
            if assignment is None:
                return INF, None
            pairs = enumerate(assignment)
        ops = tuple(
            (atoms[left[i]], atoms[right[j]], weights[i][j])
            for i, j in pairs
            if left[i] != right[j]
        )
        return sum(c for _, _, c in ops), ops

    def label_distance(self, a: Iterable[Atom], b: Iterable[Atom], site=None, target_site=None) -> tuple[float, list[EditOp]]:
        cost, raw = self._label(frozenset(a), frozenset(b))
        if raw is None:
            raise InfeasibleMatchingError((), "label members")
        return cost, [EditOp(x, y, c, site, target_site) for x, y, c in raw]

    def description_distance(self, a: ConceptSetDescription, b: ConceptSetDescription) -> EditPath:
        la, lb = a.labels, b.labels
        n1, n2 = len(la), len(lb)
        n = max(n1, n2)
        if n == 0:
            return EditPath(a.exemplar, b.exemplar, (), 0, ())
        empty: frozenset[Atom] = frozenset()
        inner = {}
        weights = []
        for i in range(n):
            row = []
            src = la[i].atoms if i < n1 else empty
            for j in range(n):
                dst = lb[j].atoms if j < n2 else empty
                if i >= n1 and j >= n2:
                    row.append(0)
                    continue
                cost, raw = self._label(src, dst)
                inner[i, j] = raw
                row.append(cost)
            weights.append(row)
        match = min_weight_full_match(weights)

        ops: list[EditOp] = []
        alignment = []
        for i, j in match.pairs:
            if i >= n1 and j >= n2:
                continue
            site = la[i].site if i < n1 else None
            tsite = lb[j].site if j < n2 else None
            alignment.append((site, tsite))
            # raw ops come from the solver and never pair TOP with TOP
            ops.extend(_new_op(_EditOp, (x, y, c, site, tsite)) for x, y, c in inner[i, j])
        return EditPath.build(a.exemplar, b.exemplar, ops, alignment)


def label_edit_distance(cm: CostModel, a: Iterable[Atom], b: Iterable[Atom]) -> tuple[float, list[EditOp]]:
    return SetEditDistance(cm).label_distance(a, b)


def description_edit_distance(cm: CostModel, a: ConceptSetDescription, b: ConceptSetDescription) -> EditPath:
    return SetEditDistance(cm).description_distance(a, b)


def apply_edit_path(a: ConceptSetDescription, path: EditPath) -> ConceptSetDescription:
    """Apply *path* to description *a*, returning the edited description.

    Every source label must appear exactly once in the path's alignment; ops
    are routed to labels by their site tags.
    """
    by_site = {l.site: l for l in a.labels}
    aligned = [s for s, _ in path.alignment if s is not None]
    if sorted(aligned) != sorted(by_site):
        raise InconsistentPathError(
            f"path alignment covers sites {sorted(aligned)} but description has {sorted(by_site)}"
        )
    ops_for: dict[tuple[str | None, str | None], list[EditOp]] = {}
    for op in path.ops:
        key = (op.site, op.target_site)
        if key not in path.alignment:
            raise InconsistentPathError(f"op {op} refers to unaligned label pair {key}")
        ops_for.setdefault(key, []).append(op)

    out = []
    for site, tsite in path.alignment:
        atoms = set(by_site[site].atoms) if site is not None else set()
        ops = ops_for.get((site, tsite), [])
        for op in ops:
            if not op.src.is_top:
                if op.src not in atoms:
                    raise InconsistentPathError(f"op {op} removes {op.src.pretty()} missing from label {site!r}")
                atoms.remove(op.src)
        for op in ops:
            if not op.dst.is_top:
                if op.dst in atoms:
                    raise InconsistentPathError(f"op {op} adds {op.dst.pretty()} already in label {site!r}")
                atoms.add(op.dst)
        if tsite is None:
            if atoms:
                raise InconsistentPathError(f"label {site!r} is dropped but still holds {sorted(map(str, atoms))}")
            continue
        out.append(LabelSet(tsite, frozenset(atoms)))
    out.sort(key=lambda l: l.site)
    return ConceptSetDescription(path.target, tuple(out))


__all__ = [
    "EditOp", "EditPath", "SetEditDistance", "InconsistentPathError", "label_edit_distance",
    "description_edit_distance", "apply_edit_path",
]
