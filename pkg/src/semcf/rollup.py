"""Roll an exemplar's ABox component up into a multiset of concept sets."""

from __future__ import annotations

from dataclasses import dataclass

from .costs import TOP_ATOM, Atom, concept, exists
from .kb import EXEMPLAR, TOP, ABoxComponent


@dataclass(frozen=True)
class LabelSet:
    site: str
    atoms: frozenset[Atom]

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=str)


@dataclass(frozen=True)
class ConceptSetDescription:
    exemplar: str
    labels: tuple[LabelSet, ...]

    def as_multiset(self) -> list[frozenset[Atom]]:
        """Labels without their site tags, in a canonical order, for multiset comparison."""
        return sorted((l.atoms for l in self.labels), key=lambda s: sorted(map(str, s)))

    def same_labels(self, other: ConceptSetDescription) -> bool:
        return self.as_multiset() == other.as_multiset()

    def to_json(self) -> dict:
        return {
            "exemplar": self.exemplar,
            "labels": [{"site": l.site, "atoms": [str(a) for a in l.sorted_atoms()]} for l in self.labels],
        }


def roll_up(comp: ABoxComponent, unlabeled_filler_as_top: bool = False) -> ConceptSetDescription:
    """Describe *comp* as one label set per non-exemplar node.

    Each label holds the node's concepts plus ``∃r.C`` for every outgoing
    ``r(a, b)`` with ``C(b)``.  ``Exemplar`` is never a member.  With
    ``unlabeled_filler_as_top`` an edge to a node without concepts yields
    ``∃r.TOP`` instead of nothing.
    """
    concepts = {n: labels - {EXEMPLAR} for n, labels in comp.node_labels.items()}
    out_edges: dict[str, list[tuple[str, str]]] = {}
    for (a, b), roles in comp.edge_labels.items():
        out_edges.setdefault(a, []).extend((r, b) for r in roles)

    labels = []
    for node in comp.nodes:
        if node == comp.exemplar:
            continue
        atoms: set[Atom] = {concept(c) for c in concepts[node]}
        for r, b in out_edges.get(node, ()):
            fillers = concepts[b]
            if fillers:
                atoms.update(exists(r, c) for c in fillers)
            elif unlabeled_filler_as_top:
                atoms.add(exists(r, TOP))
        labels.append(LabelSet(node, frozenset(atoms)))
    return ConceptSetDescription(comp.exemplar, tuple(labels))


def describe_all(components, unlabeled_filler_as_top: bool = False) -> dict[str, ConceptSetDescription]:
    return {e: roll_up(c, unlabeled_filler_as_top) for e, c in components.items()}


__all__ = ["LabelSet", "ConceptSetDescription", "roll_up", "describe_all", "TOP_ATOM"]
