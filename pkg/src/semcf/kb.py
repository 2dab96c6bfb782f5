"""Explanation datasets: vocabulary, knowledge base, predictions, and graph encodings.

An explanation dataset bundles a description-logic knowledge base (TBox of
subsumption axioms, ABox of concept and role assertions) with a set of
exemplar individuals and one or more tables of classifier predictions.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

TOP = "TOP"
EXEMPLAR = "Exemplar"
DEFAULT_TABLE = "default"

_KNOWN_KEYS = {"concepts", "roles", "individuals", "classes", "tbox", "abox", "exemplars", "predictions"}


class DatasetError(ValueError):
    """Raised when a dataset document cannot be turned into an ExplanationDataset."""


class KindConflictError(DatasetError):
    pass


class UnknownExemplarError(DatasetError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


@dataclass(frozen=True)
class Vocabulary:
    concept_names: frozenset[str]
    role_names: frozenset[str]
    individual_names: frozenset[str]

    def kind_of(self, name: str) -> str | None:
        if name in self.concept_names:
            return "concept"
        if name in self.role_names:
            return "role"
        if name in self.individual_names:
            return "individual"
        return None


@dataclass(frozen=True, order=True)
class Axiom:
    sub: str
    sup: str
    kind: str = "concept"


@dataclass(frozen=True, order=True)
class ConceptAssertion:
    concept: str
    individual: str


@dataclass(frozen=True, order=True)
class RoleAssertion:
    role: str
    subject: str
    object: str


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: tuple[Axiom, ...] = ()
    concept_assertions: tuple[ConceptAssertion, ...] = ()
    role_assertions: tuple[RoleAssertion, ...] = ()


@dataclass(frozen=True)
class ExplanationDataset:
    vocabulary: Vocabulary
    kb: KnowledgeBase
    exemplars: tuple[str, ...]
    predictions: Mapping[str, Mapping[str, str]]
    classes: frozenset[str]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def table(self, table_id: str = DEFAULT_TABLE) -> Mapping[str, str]:
        try:
            return self.predictions[table_id]
        except KeyError:
            raise DatasetError(
                f"unknown prediction table {table_id!r}; available: {sorted(self.predictions)}"
            ) from None

    def prediction(self, exemplar: str, table_id: str = DEFAULT_TABLE) -> str:
        return self.table(table_id)[exemplar]


@dataclass(frozen=True)
class Violation:
    severity: str
    code: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: [{self.code}] {self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def errors(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.severity == "error")

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


# --------------------------------------------------------------------------
# parsing / serialization


def _str_list(doc: Mapping, key: str) -> list[str]:
    value = doc.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
        raise DatasetError(f"{key!r} must be a list of non-empty strings")
    return value


def _field(entry: object, key: str, where: str) -> str:
    if not isinstance(entry, Mapping) or not isinstance(entry.get(key), str) or not entry[key]:
        raise DatasetError(f"{where}: missing or invalid field {key!r}")
    return entry[key]


def parse_dataset(data: bytes | str) -> ExplanationDataset:
    """Parse a dataset JSON document.

    Concepts and roles used but not declared are declared with the kind
    implied by their position and reported in ``ExplanationDataset.warnings``.
    Individuals need no declaration.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DatasetError(f"dataset is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DatasetError("dataset document must be a JSON object")
    return dataset_from_dict(doc)


def dataset_from_dict(doc: Mapping) -> ExplanationDataset:
    warnings: list[str] = [f"ignoring unknown key {k!r}" for k in sorted(set(doc) - _KNOWN_KEYS)]

    declared = {
        "concept": _str_list(doc, "concepts"),
        "role": _str_list(doc, "roles"),
        "individual": _str_list(doc, "individuals"),
    }
    kinds: dict[str, str] = {}
    for kind, names in declared.items():
        for name in names:
            _declare(kinds, name, kind, warnings, infer=False)
    _declare(kinds, EXEMPLAR, "concept", warnings, infer=False)

    tbox: list[Axiom] = []
    raw_tbox = doc.get("tbox", [])
    if not isinstance(raw_tbox, list):
        raise DatasetError("'tbox' must be a list")
    for i, entry in enumerate(raw_tbox):
        where = f"tbox[{i}]"
        sub, sup = _field(entry, "sub", where), _field(entry, "sup", where)
        kind = entry.get("kind", "concept")
        if kind not in ("concept", "role"):
            raise DatasetError(f"{where}: kind must be 'concept' or 'role', got {kind!r}")
        _declare(kinds, sub, kind, warnings)
        _declare(kinds, sup, kind, warnings)
        tbox.append(Axiom(sub, sup, kind))

    abox = doc.get("abox", {})
    if not isinstance(abox, Mapping):
        raise DatasetError("'abox' must be an object")
    concept_assertions: list[ConceptAssertion] = []
    for i, entry in enumerate(abox.get("concept_assertions", [])):
        where = f"abox.concept_assertions[{i}]"
        concept, ind = _field(entry, "concept", where), _field(entry, "individual", where)
        _declare(kinds, concept, "concept", warnings)
        _declare(kinds, ind, "individual", warnings)
        concept_assertions.append(ConceptAssertion(concept, ind))
    role_assertions: list[RoleAssertion] = []
    for i, entry in enumerate(abox.get("role_assertions", [])):
        where = f"abox.role_assertions[{i}]"
        role = _field(entry, "role", where)
        subj, obj = _field(entry, "subject", where), _field(entry, "object", where)
        _declare(kinds, role, "role", warnings)
        _declare(kinds, subj, "individual", warnings)
        _declare(kinds, obj, "individual", warnings)
        role_assertions.append(RoleAssertion(role, subj, obj))

    exemplars = _str_list(doc, "exemplars")
    if len(set(exemplars)) != len(exemplars):
        raise DatasetError("'exemplars' contains duplicates")
    for e in exemplars:
        _declare(kinds, e, "individual", warnings)

    classes = _str_list(doc, "classes")
    predictions = _parse_predictions(doc.get("predictions", {}), set(exemplars))

    vocabulary = Vocabulary(
        concept_names=frozenset(n for n, k in kinds.items() if k == "concept"),
        role_names=frozenset(n for n, k in kinds.items() if k == "role"),
        individual_names=frozenset(n for n, k in kinds.items() if k == "individual"),
    )
    ds = ExplanationDataset(
        vocabulary=vocabulary,
        kb=KnowledgeBase(tuple(tbox), tuple(concept_assertions), tuple(role_assertions)),
        exemplars=tuple(exemplars),
        predictions=predictions,
        classes=frozenset(classes),
        warnings=tuple(warnings),
    )
    cycles = find_tbox_cycles(ds.kb.tbox)
    if cycles:
        ds = _with_warnings(ds, [f"TBox cycle: {' ⊑ '.join(c + c[:1])}" for c in cycles])
    return ds


def _with_warnings(ds: ExplanationDataset, extra: list[str]) -> ExplanationDataset:
    return ExplanationDataset(ds.vocabulary, ds.kb, ds.exemplars, ds.predictions, ds.classes,
                              ds.warnings + tuple(extra))


def _declare(kinds: dict[str, str], name: str, kind: str, warnings: list[str], infer: bool = True) -> None:
    if name == TOP:
        raise DatasetError(f"{TOP!r} is reserved and cannot be used as a {kind} name")
    known = kinds.get(name)
    if known is None:
        kinds[name] = kind
        if infer and kind != "individual":
            warnings.append(f"undeclared {kind} {name!r} inferred from usage")
    elif known != kind:
        raise KindConflictError(f"identifier {name!r} used both as {known} and as {kind}")


def _parse_predictions(raw: object, exemplars: set[str]) -> dict[str, dict[str, str]]:
    if not isinstance(raw, Mapping):
        raise DatasetError("'predictions' must be an object keyed by classifier id")
    tables: dict[str, dict[str, str]] = {}
    for table_id in sorted(raw):
        table = raw[table_id]
        if not isinstance(table, Mapping) or not all(isinstance(v, str) for v in table.values()):
            raise DatasetError(f"predictions[{table_id!r}] must map exemplar ids to class labels")
        unknown = sorted(set(table) - exemplars)
        if unknown:
            raise UnknownExemplarError(f"predictions[{table_id!r}] names unknown exemplar(s): {unknown}")
        tables[table_id] = {e: table[e] for e in sorted(table)}
    return tables


def overlay_predictions(ds: ExplanationDataset, table_id: str, table: Mapping[str, str]) -> ExplanationDataset:
    """Return a copy of *ds* with one more prediction table (e.g. a second classifier)."""
    unknown = sorted(set(table) - set(ds.exemplars))
    if unknown:
        raise UnknownExemplarError(f"prediction table {table_id!r} names unknown exemplar(s): {unknown}")
    predictions = dict(ds.predictions)
    predictions[table_id] = {e: table[e] for e in sorted(table)}
    return ExplanationDataset(ds.vocabulary, ds.kb, ds.exemplars, predictions,
                              ds.classes | frozenset(table.values()), ds.warnings)


def dataset_to_dict(ds: ExplanationDataset) -> dict:
    v = ds.vocabulary
    return {
        "concepts": sorted(v.concept_names - {EXEMPLAR}),
        "roles": sorted(v.role_names),
        "individuals": sorted(v.individual_names),
        "classes": sorted(ds.classes),
        "tbox": [{"sub": a.sub, "sup": a.sup, "kind": a.kind} for a in ds.kb.tbox],
        "abox": {
            "concept_assertions": [{"concept": a.concept, "individual": a.individual}
                                   for a in ds.kb.concept_assertions],
            "role_assertions": [{"role": a.role, "subject": a.subject, "object": a.object}
                                for a in ds.kb.role_assertions],
        },
        "exemplars": list(ds.exemplars),
        "predictions": {t: dict(p) for t, p in sorted(ds.predictions.items())},
    }


def serialize_dataset(ds: ExplanationDataset, indent: int | None = 2) -> str:
    return json.dumps(dataset_to_dict(ds), indent=indent, ensure_ascii=False)


def load_dataset(path) -> ExplanationDataset:
    with open(path, "rb") as fh:
        return parse_dataset(fh.read())


# --------------------------------------------------------------------------
# validation


def _kb_identifiers(kb: KnowledgeBase) -> Iterable[tuple[str, str, str]]:
    """Yield (identifier, kind, location) for every identifier occurrence in the KB."""
    for i, a in enumerate(kb.tbox):
        yield a.sub, a.kind, f"tbox[{i}].sub"
        yield a.sup, a.kind, f"tbox[{i}].sup"
    for i, c in enumerate(kb.concept_assertions):
        yield c.concept, "concept", f"abox.concept_assertions[{i}].concept"
        yield c.individual, "individual", f"abox.concept_assertions[{i}].individual"
    for i, r in enumerate(kb.role_assertions):
        yield r.role, "role", f"abox.role_assertions[{i}].role"
        yield r.subject, "individual", f"abox.role_assertions[{i}].subject"
        yield r.object, "individual", f"abox.role_assertions[{i}].object"


def validate_dataset(ds: ExplanationDataset, role_class_collision: str = "error") -> ValidationReport:
    """Check the side conditions an explanation dataset must satisfy.

    ``role_class_collision`` sets the severity used when a class label occurs
    as a role name in the KB.
    """
    out: list[Violation] = []

    def add(code: str, location: str, message: str, severity: str = "error") -> None:
        out.append(Violation(severity, code, location, message))

    v = ds.vocabulary
    for a_name, a, b_name, b in (("concept", v.concept_names, "role", v.role_names),
                                 ("concept", v.concept_names, "individual", v.individual_names),
                                 ("role", v.role_names, "individual", v.individual_names)):
        for name in sorted(a & b):
            add("vocabulary-not-disjoint", "vocabulary", f"{name!r} declared as both {a_name} and {b_name}")
    for name in sorted(v.concept_names | v.role_names | v.individual_names):
        if not name:
            add("empty-identifier", "vocabulary", "identifiers must be non-empty")
        elif name == TOP:
            add("reserved-identifier", "vocabulary", f"{TOP!r} is reserved")

    for ident, kind, loc in _kb_identifiers(ds.kb):
        declared = v.kind_of(ident)
        if declared is None:
            add("undeclared-identifier", loc, f"{ident!r} is not declared as a {kind}")
        elif declared != kind:
            add("kind-mismatch", loc, f"{ident!r} is declared as {declared} but used as {kind}")

    exemplar_set = set(ds.exemplars)
    for i, a in enumerate(ds.kb.tbox):
        for ident in (a.sub, a.sup):
            if ident == EXEMPLAR:
                add("exemplar-in-tbox", f"tbox[{i}]", "Exemplar occurs in TBox")
            elif ident in exemplar_set:
                add("exemplar-in-tbox", f"tbox[{i}]", f"exemplar {ident!r} occurs in TBox")
    for i, c in enumerate(ds.kb.concept_assertions):
        if c.concept == EXEMPLAR and c.individual not in exemplar_set:
            add("exemplar-flag-mismatch", f"abox.concept_assertions[{i}]",
                f"Exemplar({c.individual}) asserted but {c.individual!r} is not an exemplar")

    for ident, kind, loc in _kb_identifiers(ds.kb):
        if ident in ds.classes:
            severity = role_class_collision if kind == "role" else "error"
            add("class-in-kb", loc, f"class occurs in KB: {ident!r}", severity)

    for e in ds.exemplars:
        if e not in v.individual_names:
            add("exemplar-not-individual", "exemplars", f"exemplar {e!r} is not an individual name")
    if not ds.predictions:
        add("missing-predictions", "predictions", "no prediction table")
    for table_id, table in sorted(ds.predictions.items()):
        for e in ds.exemplars:
            if e not in table:
                add("missing-prediction", f"predictions.{table_id}", f"exemplar {e!r} has no prediction")
        for e, label in table.items():
            if e not in exemplar_set:
                add("unknown-exemplar", f"predictions.{table_id}", f"{e!r} is not an exemplar")
            if label not in ds.classes:
                add("unknown-class", f"predictions.{table_id}.{e}", f"class {label!r} is not declared")
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# graph encodings


@dataclass(frozen=True)
class TBoxGraph:
    nodes: frozenset[str]
    edges: tuple[tuple[str, str], ...]
    kinds: Mapping[str, str]
    adjacency: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False)
    weights: Mapping[tuple[str, str], float] | None = field(default=None, repr=False, compare=False)


def find_tbox_cycles(tbox: Iterable[Axiom]) -> list[list[str]]:
    """Strongly connected components of size > 1 (or self-loops) in the subsumption graph."""
    succ: dict[str, set[str]] = {}
    for a in tbox:
        succ.setdefault(a.sub, set()).add(a.sup)
        succ.setdefault(a.sup, set())
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    stack: list[str] = []
    on_stack: set[str] = set()
    cycles: list[list[str]] = []
    counter = 0
    for root in sorted(succ):
        if root in index:
            continue
        # iterative Tarjan
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(succ[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                if len(comp) > 1 or node in succ[node]:
                    cycles.append(sorted(comp))
    return sorted(cycles)


def build_tbox_graph(ds: ExplanationDataset, weights: Mapping[tuple[str, str], float] | None = None) -> TBoxGraph:
    """Encode the TBox as a directed graph whose sink is ``TOP``.

    Each axiom ``a ⊑ b`` gives an edge ``(a, b)``; every concept or role with
    no outgoing edge is attached to ``TOP``.  A group of atoms that only
    reaches itself (a pure subsumption cycle) gets its smallest member
    attached to ``TOP`` as well so that every atom has a path to ``TOP``.
    ``weights`` optionally assigns a length to individual axiom edges.
    """
    v = ds.vocabulary
    atoms = v.concept_names | v.role_names
    kinds = {a: "concept" for a in v.concept_names} | {r: "role" for r in v.role_names}
    kinds[TOP] = "top"
    edges = {(a.sub, a.sup) for a in ds.kb.tbox}
    has_out = {a for a, _ in edges}
    edges |= {(a, TOP) for a in atoms if a not in has_out}

    adj: dict[str, set[str]] = {a: set() for a in atoms | {TOP}}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    # attach components cut off from TOP (only possible through cycles)
    reached = _undirected_reach(adj, TOP)
    for atom in sorted(atoms):
        if atom not in reached:
            edges.add((atom, TOP))
            adj[atom].add(TOP)
            adj[TOP].add(atom)
            reached |= _undirected_reach(adj, atom)

    w = None
    if weights:
        w = {}
        for (a, b), value in weights.items():
            if value < 0:
                raise ValueError(f"negative edge weight for ({a}, {b})")
            w[(a, b)] = w[(b, a)] = float(value)
    return TBoxGraph(
        nodes=frozenset(adj),
        edges=tuple(sorted(edges)),
        kinds=kinds,
        adjacency={n: tuple(sorted(ns)) for n, ns in adj.items()},
        weights=w,
    )


def _undirected_reach(adj: Mapping[str, Iterable[str]], start: str) -> set[str]:
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


@dataclass(frozen=True)
class ABoxGraph:
    nodes: tuple[str, ...]
    node_labels: Mapping[str, frozenset[str]]
    edges: tuple[tuple[str, str], ...]
    edge_labels: Mapping[tuple[str, str], frozenset[str]]

    def neighbours(self) -> dict[str, set[str]]:
        nb: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return nb


@dataclass(frozen=True)
class ABoxComponent:
    exemplar: str
    nodes: tuple[str, ...]
    node_labels: Mapping[str, frozenset[str]]
    edges: tuple[tuple[str, str], ...]
    edge_labels: Mapping[tuple[str, str], frozenset[str]]


def build_abox_graph(ds: ExplanationDataset) -> ABoxGraph:
    labels: dict[str, set[str]] = {n: set() for n in ds.vocabulary.individual_names}
    for c in ds.kb.concept_assertions:
        labels.setdefault(c.individual, set()).add(c.concept)
    for e in ds.exemplars:
        labels.setdefault(e, set()).add(EXEMPLAR)
    edge_labels: dict[tuple[str, str], set[str]] = {}
    for r in ds.kb.role_assertions:
        labels.setdefault(r.subject, set())
        labels.setdefault(r.object, set())
        edge_labels.setdefault((r.subject, r.object), set()).add(r.role)
    return ABoxGraph(
        nodes=tuple(sorted(labels)),
        node_labels={n: frozenset(labels[n]) for n in sorted(labels)},
        edges=tuple(sorted(edge_labels)),
        edge_labels={e: frozenset(edge_labels[e]) for e in sorted(edge_labels)},
    )


def exemplar_component(g: ABoxGraph, exemplar: str, neighbours: Mapping[str, Iterable[str]] | None = None) -> ABoxComponent:
    """The sub-graph reachable from *exemplar* ignoring edge direction."""
    if exemplar not in g.node_labels:
        raise UnknownExemplarError(f"unknown exemplar {exemplar!r}")
    nodes = _undirected_reach(neighbours if neighbours is not None else g.neighbours(), exemplar)
    edges = tuple(e for e in g.edges if e[0] in nodes)
    return ABoxComponent(
        exemplar=exemplar,
        nodes=tuple(sorted(nodes)),
        node_labels={n: g.node_labels[n] for n in sorted(nodes)},
        edges=edges,
        edge_labels={e: g.edge_labels[e] for e in edges},
    )


def exemplar_components(ds: ExplanationDataset, g: ABoxGraph | None = None) -> dict[str, ABoxComponent]:
    g = g if g is not None else build_abox_graph(ds)
    nb = g.neighbours()
    return {e: exemplar_component(g, e, nb) for e in ds.exemplars}
