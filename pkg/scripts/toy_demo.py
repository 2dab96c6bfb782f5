"""Walk through the two-exemplar animal dataset end to end."""

from pathlib import Path

from semcf.costs import CostModel
from semcf.explain import counterfactual, global_importance
from semcf.kb import build_tbox_graph, exemplar_components, load_dataset
from semcf.rollup import describe_all
from semcf.store import preprocess

DATASET = Path(__file__).resolve().parent.parent / "tests" / "data" / "animals.json"


def main() -> None:
    ds = load_dataset(DATASET)
    cm = CostModel(build_tbox_graph(ds))
    for name, d in describe_all(exemplar_components(ds)).items():
        print(name, [sorted(map(str, label.atoms)) for label in d.labels])

    cache = preprocess(ds, cm)
    print("distance matrix:", cache.matrix)
    for x in counterfactual(cache, ds, "e1", "DomesticAnimal"):
        print(f"{x.source} -> {x.counterfactual}, cost {x.edits.total_cost}")
        for op in x.edits.ops:
            print("  op:", op)
        for edit in x.collapsed_abox_edits:
            print("  edit:", edit)
    print(global_importance(cache, ds, "WildAnimal", "DomesticAnimal").render("table"))


if __name__ == "__main__":
    main()
