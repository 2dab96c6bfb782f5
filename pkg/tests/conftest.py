import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semcf.costs import CostModel  # noqa: E402
from semcf.kb import build_tbox_graph, dataset_from_dict, load_dataset  # noqa: E402

DATA = Path(__file__).parent / "data"

ANIMAL_TBOX = [
    ("Cat", "Mammal"),
    ("Dog", "Mammal"),
    ("Ant", "Insect"),
    ("Mammal", "Animal"),
    ("Insect", "Animal"),
]


def animal_tbox_doc(**extra) -> dict:
    doc = {
        "concepts": ["Cat", "Dog", "Ant", "Mammal", "Insect", "Animal"],
        "roles": [],
        "tbox": [{"sub": s, "sup": p, "kind": "concept"} for s, p in ANIMAL_TBOX],
    }
    doc.update(extra)
    return doc


@pytest.fixture
def toy_path() -> Path:
    return DATA / "animals.json"


@pytest.fixture
def toy_doc(toy_path) -> dict:
    return json.loads(toy_path.read_text())


@pytest.fixture
def toy(toy_path):
    return load_dataset(toy_path)


@pytest.fixture
def toy_cm(toy):
    return CostModel(build_tbox_graph(toy))


@pytest.fixture
def animals():
    return dataset_from_dict(animal_tbox_doc())


@pytest.fixture
def animals_cm(animals):
    return CostModel(build_tbox_graph(animals))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
