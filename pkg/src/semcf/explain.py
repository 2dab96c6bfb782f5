"""Local counterfactual explanations and global atom-importance reports.

Importance of an atom is ``(introduced - removed) / |G|`` over the explanations
in ``G``: an atom that counterfactuals tend to gain scores positive, one they
tend to lose scores negative.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .costs import Atom
from .kb import DEFAULT_TABLE, ExplanationDataset
from .setdist import EditOp, EditPath
from .store import DistanceCache, nearest_by_class, resolve_exemplars


class EmptySelectorError(ValueError):
    pass


@dataclass(frozen=True)
class AboxEdit:
    """An assertion-level edit; ``ops`` are the description-level ops it stands for."""

    kind: str  # replace | insert | delete | op
    individual: str | None
    old: Atom | None
    new: Atom | None
    ops: tuple[EditOp, ...]

    def __str__(self) -> str:
        ind = self.individual if self.individual is not None else "_"
        if self.kind == "replace":
            return f"replace {self.old.pretty()}({ind}) with {self.new.pretty()}({ind})"
        if self.kind == "insert":
            return f"insert {self.new.pretty()}({ind})"
        if self.kind == "delete":
            return f"delete {self.old.pretty()}({ind})"
        return str(self.ops[0])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "individual": self.individual,
            "old": str(self.old) if self.old is not None else None,
            "new": str(self.new) if self.new is not None else None,
            "text": str(self),
            "ops": [str(op) for op in self.ops],
        }


@dataclass(frozen=True)
class Explanation:
    source: str
    target_class: str
    counterfactual: str
    edits: EditPath
    collapsed_abox_edits: tuple[AboxEdit, ...] | None = None

    def to_json(self) -> dict:
        out = {
            "source": self.source,
            "target_class": self.target_class,
            "counterfactual": self.counterfactual,
            "cost": self.edits.total_cost,
            "edits": [
                {"from": str(op.src), "to": str(op.dst), "cost": op.cost, "site": op.site,
                 "target_site": op.target_site}
                for op in self.edits.ops
            ],
        }
        if self.collapsed_abox_edits is not None:
            out["abox_edits"] = [e.to_json() for e in self.collapsed_abox_edits]
        return out


def counterfactual(
    cache: DistanceCache,
    ds: ExplanationDataset,
    source: str,
    target_class: str,
    k: int = 1,
    table: str = DEFAULT_TABLE,
    collapse: bool = True,
) -> list[Explanation]:
    """Nearest exemplars of *target_class* with the stored edit paths leading to them."""
    nearest = nearest_by_class(cache, ds, source, target_class, k, table)
    out = []
    for exemplar, _ in nearest:
        path = cache.path(source, exemplar)
        x = Explanation(source, target_class, exemplar, path)
        if collapse and cache.backend == "set":
            x = Explanation(source, target_class, exemplar, path, tuple(collapse_to_abox_edits(x, ds)))
        out.append(x)
    return out


def collapse_to_abox_edits(x: Explanation, ds: ExplanationDataset) -> list[AboxEdit]:
    """Map description-level edits back to assertion edits on the source's ABox.

    A concept edit ``C→D`` on individual ``b`` absorbs every edit ``∃r.C→∃r.D``
    on an individual ``a`` with ``r(a, b)`` in the ABox, since both record the
    same change of ``C(b)``.  Everything else is passed through unchanged.
    """
    ops = x.edits.ops
    witnessed = {(r.subject, r.role, r.object) for r in ds.kb.role_assertions}
    is_concept_op = [op.src.kind in ("concept", "top") and op.dst.kind in ("concept", "top") for op in ops]

    groups: dict[int, list[EditOp]] = {}
    absorbed: set[int] = set()
    for i, op in enumerate(ops):
        if not is_concept_op[i]:
            continue
        groups[i] = [op]
        if op.site is None:
            continue
        for j, other in enumerate(ops):
            if is_concept_op[j] or j in absorbed or other.site is None:
                continue
            if _mirrors(other, op) and (other.site, _role_of(other), op.site) in witnessed:
                groups[i].append(other)
                absorbed.add(j)

    out: list[AboxEdit] = []
    for i, op in enumerate(ops):
        if i in groups:
            out.append(AboxEdit(op.kind, op.site, None if op.src.is_top else op.src,
                                None if op.dst.is_top else op.dst, tuple(groups[i])))
        elif i not in absorbed:
            out.append(AboxEdit("op", op.site, op.src, op.dst, (op,)))
    return out


def _role_of(op: EditOp) -> str | None:
    for atom in (op.src, op.dst):
        if atom.kind == "exists":
            return atom.name
    return None


def _mirrors(ex_op: EditOp, concept_op: EditOp) -> bool:
    """``ex_op`` is ``∃r.C→∃r.D`` (or ⊤-variants) for concept edit ``C→D``."""
    r = _role_of(ex_op)
    if r is None:
        return False
    for ex_atom, c_atom in ((ex_op.src, concept_op.src), (ex_op.dst, concept_op.dst)):
        if c_atom.is_top:
            if not ex_atom.is_top:
                return False
        elif not (ex_atom.kind == "exists" and ex_atom.name == r and ex_atom.filler == c_atom.name):
            return False
    return True


# --------------------------------------------------------------------------
# global importance


@dataclass(frozen=True)
class ImportanceRow:
    atom: str
    importance: float
    introduced: int
    removed: int


@dataclass(frozen=True)
class ImportanceReport:
    source_selector: str | tuple[str, ...]
    target_class: str
    rows: tuple[ImportanceRow, ...]
    n_explanations: int
    skipped: tuple[str, ...] = ()

    def importance(self, atom: str) -> float:
        for row in self.rows:
            if row.atom == atom:
                return row.importance
        return 0.0

    def to_json(self) -> dict:
        return {
            "source_selector": self.source_selector if isinstance(self.source_selector, str)
            else list(self.source_selector),
            "target_class": self.target_class,
            "n_explanations": self.n_explanations,
            "skipped": list(self.skipped),
            "rows": [{"atom": r.atom, "importance": r.importance, "introduced": r.introduced,
                      "removed": r.removed} for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["atom", "importance", "introduced", "removed"])
        for r in self.rows:
            w.writerow([r.atom, repr(r.importance), r.introduced, r.removed])
        return buf.getvalue()

    def to_table(self) -> str:
        width = max([len("atom")] + [len(r.atom) for r in self.rows])
        lines = [f"{'atom':<{width}}  {'importance':>10}  {'introduced':>10}  {'removed':>7}"]
        for r in self.rows:
            lines.append(f"{r.atom:<{width}}  {r.importance:>10.3f}  {r.introduced:>10d}  {r.removed:>7d}")
        lines.append(f"explanations: {self.n_explanations}, skipped: {len(self.skipped)}")
        return "\n".join(lines)

    def render(self, fmt: str = "table") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, ensure_ascii=False)
        if fmt == "csv":
            return self.to_csv()
        return self.to_table()


def importance_from_paths(paths: Iterable[EditPath]) -> tuple[list[ImportanceRow], int]:
    """Net introduction rate per atom over a multiset of explanations.

    ``(introduced(y) - removed(y)) / |G|`` with ``|G|`` the number of paths.
    """
    paths = list(paths)
    introduced: Counter[str] = Counter()
    removed: Counter[str] = Counter()
    for path in paths:
        for op in path.ops:
            if not op.dst.is_top:
                introduced[op.dst.pretty()] += 1
            if not op.src.is_top:
                removed[op.src.pretty()] += 1
    n = len(paths)
    rows = [
        ImportanceRow(atom, (introduced[atom] - removed[atom]) / n, introduced[atom], removed[atom])
        for atom in set(introduced) | set(removed)
    ]
    rows.sort(key=lambda r: (-abs(r.importance), r.atom))
    return rows, n


def global_importance(
    cache: DistanceCache,
    ds: ExplanationDataset,
    source_selector: str | Iterable[str],
    target_class: str,
    table: str = DEFAULT_TABLE,
) -> ImportanceReport:
    """Aggregate one minimal explanation per selected exemplar into atom importances.

    *source_selector* is a class label (all exemplars predicted as it) or an
    explicit list of exemplars.  Exemplars without a finite counterfactual
    are skipped and listed in ``skipped``.
    """
    sources = resolve_exemplars(ds, source_selector, table)
    if not sources:
        raise EmptySelectorError(f"selector {source_selector!r} matches no exemplars")
    paths, skipped = [], []
    for e in sources:
        xs = counterfactual(cache, ds, e, target_class, 1, table, collapse=False)
        if xs:
            paths.append(xs[0].edits)
        else:
            skipped.append(e)
    selector = source_selector if isinstance(source_selector, str) else tuple(sources)
    if not paths:
        return ImportanceReport(selector, target_class, (), 0, tuple(skipped))
    rows, n = importance_from_paths(paths)
    return ImportanceReport(selector, target_class, tuple(rows), n, tuple(skipped))
