"""Random explanation datasets for benchmarks and property tests."""

from __future__ import annotations

import random


def random_hierarchy(rng: random.Random, names: list[str], branching: int = 4) -> list[tuple[str, str]]:
    """Random forest over *names*: each name after the first few picks an earlier parent."""
    axioms = []
    for i, name in enumerate(names):
        if i >= branching:
            parent = names[rng.randrange(max(1, i // branching), i)] if i > branching else names[0]
            axioms.append((name, parent))
    return axioms


def synthetic_dataset(
    n_exemplars: int = 200,
    nodes_per_component: int = 10,
    n_concepts: int = 450,
    n_roles: int = 50,
    n_classes: int = 2,
    concepts_per_node: tuple[int, int] = (1, 2),
    edges_per_node: tuple[int, int] = (0, 1),
    seed: int = 0,
) -> dict:
    """A dataset document: exemplars with roughly tree-shaped components.

    Each exemplar ``depicts`` every other node of its component; non-exemplar
    nodes carry a few concepts and a few outgoing role edges to siblings.
    """
    rng = random.Random(seed)
    concepts = [f"C{i}" for i in range(n_concepts)]
    roles = [f"r{i}" for i in range(n_roles)]
    tbox = [{"sub": s, "sup": p, "kind": "concept"} for s, p in random_hierarchy(rng, concepts)]
    tbox += [{"sub": s, "sup": p, "kind": "role"} for s, p in random_hierarchy(rng, roles, 3)]
    classes = [f"class{k}" for k in range(n_classes)]
    # class-specific concept pools so that classes are distinguishable
    pools = [rng.sample(concepts, max(10, n_concepts // 4)) for _ in classes]

    concept_assertions, role_assertions, exemplars, predictions = [], [], [], {}
    for e in range(n_exemplars):
        ex = f"ex{e:04d}"
        exemplars.append(ex)
        cls = rng.randrange(n_classes)
        predictions[ex] = classes[cls]
        nodes = [f"{ex}_n{k}" for k in range(nodes_per_component - 1)]
        for node in nodes:
            role_assertions.append({"role": roles[0], "subject": ex, "object": node})
            for c in rng.sample(pools[cls] if rng.random() < 0.6 else concepts, rng.randint(*concepts_per_node)):
                concept_assertions.append({"concept": c, "individual": node})
            for _ in range(rng.randint(*edges_per_node)):
                other = rng.choice(nodes)
                if other != node:
                    role_assertions.append({"role": rng.choice(roles[1:]), "subject": node, "object": other})
    return {
        "concepts": concepts,
        "roles": roles,
        "classes": classes,
        "tbox": tbox,
        "abox": {"concept_assertions": concept_assertions, "role_assertions": role_assertions},
        "exemplars": exemplars,
        "predictions": {"default": predictions},
    }
