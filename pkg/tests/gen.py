"""Seeded random instances (TBoxes, descriptions, components, datasets) for property tests."""

from __future__ import annotations

import random

from semcf.costs import CostModel, concept, exists
from semcf.kb import build_tbox_graph, dataset_from_dict
from semcf.rollup import ConceptSetDescription, LabelSet


def random_tbox_doc(rng: random.Random, n_concepts: int, n_roles: int, extra_axioms: int = 2) -> dict:
    """A small vocabulary with a random forest-like hierarchy plus a few extra (possibly cyclic) axioms."""
    concepts = [f"C{i}" for i in range(n_concepts)]
    roles = [f"r{i}" for i in range(n_roles)]
    tbox = []
    for names, kind in ((concepts, "concept"), (roles, "role")):
        for i in range(1, len(names)):
            if rng.random() < 0.7:
                tbox.append({"sub": names[i], "sup": names[rng.randrange(i)], "kind": kind})
        for _ in range(extra_axioms if len(names) > 1 else 0):
            a, b = rng.sample(names, 2)
            tbox.append({"sub": a, "sup": b, "kind": kind})
    return {"concepts": concepts, "roles": roles, "tbox": tbox}


def random_cost_model(rng: random.Random, n_concepts: int = 8, n_roles: int = 3):
    doc = random_tbox_doc(rng, n_concepts, n_roles)
    ds = dataset_from_dict(doc)
    return ds, CostModel(build_tbox_graph(ds))


def random_label(rng: random.Random, ds, max_atoms: int = 6) -> frozenset:
    concepts = sorted(ds.vocabulary.concept_names - {"Exemplar"})
    roles = sorted(ds.vocabulary.role_names)
    atoms = set()
    for _ in range(rng.randint(0, max_atoms)):
        if roles and rng.random() < 0.4:
            atoms.add(exists(rng.choice(roles), rng.choice(concepts)))
        else:
            atoms.add(concept(rng.choice(concepts)))
    return frozenset(atoms)


def random_description(rng: random.Random, ds, name: str, max_labels: int = 5, max_atoms: int = 6):
    labels = tuple(
        LabelSet(f"{name}_{k}", random_label(rng, ds, max_atoms)) for k in range(rng.randint(0, max_labels))
    )
    return ConceptSetDescription(name, labels)


def random_dataset_doc(
    rng: random.Random,
    n_exemplars: int = 4,
    max_nodes: int = 4,
    n_concepts: int = 6,
    n_roles: int = 3,
    classes: tuple[str, ...] = ("Pos", "Neg"),
) -> dict:
    """Exemplars with small random components; every class gets at least one exemplar when possible."""
    doc = random_tbox_doc(rng, n_concepts, n_roles)
    concepts, roles = doc["concepts"], doc["roles"]
    ca, ra, exemplars, predictions = [], [], [], {}
    for e in range(n_exemplars):
        ex = f"x{e}"
        exemplars.append(ex)
        predictions[ex] = classes[e % len(classes)] if e < len(classes) else rng.choice(classes)
        nodes = [f"{ex}n{k}" for k in range(rng.randint(0, max_nodes - 1))]
        for node in nodes:
            ra.append({"role": rng.choice(roles), "subject": ex, "object": node})
            for c in rng.sample(concepts, rng.randint(0, 2)):
                ca.append({"concept": c, "individual": node})
            if len(nodes) > 1 and rng.random() < 0.5:
                other = rng.choice([n for n in nodes if n != node])
                ra.append({"role": rng.choice(roles), "subject": node, "object": other})
    doc.update({
        "classes": list(classes),
        "abox": {"concept_assertions": ca, "role_assertions": ra},
        "exemplars": exemplars,
        "predictions": {"default": predictions},
    })
    return doc
