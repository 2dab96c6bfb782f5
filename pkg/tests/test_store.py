import json
import random

import pytest
from gen import random_dataset_doc
from hypothesis import given, settings
from hypothesis import strategies as st

from semcf.costs import INF, CostModel, concept, parse_overrides
from semcf.kb import DatasetError, build_tbox_graph, dataset_from_dict, exemplar_components, overlay_predictions
from semcf.rollup import describe_all
from semcf.setdist import apply_edit_path
from semcf.store import (
    CACHE_SUFFIX,
    PreprocessError,
    PreprocessOptions,
    StaleCacheError,
    UnsupportedCacheVersionError,
    dataset_fingerprint,
    load_cache,
    nearest_by_class,
    preprocess,
    read_cache,
    resolve_exemplars,
    save_cache,
)


def single_node_dataset(labels: dict[str, list[str]], predictions: dict[str, str], concepts=None) -> dict:
    """One exemplar per entry, depicting a single node that carries the given concepts."""
    ca, ra = [], []
    for e, cs in labels.items():
        ra.append({"role": "depicts", "subject": e, "object": f"{e}_n"})
        ca += [{"concept": c, "individual": f"{e}_n"} for c in cs]
    return {
        "concepts": concepts or sorted({c for cs in labels.values() for c in cs}),
        "roles": ["depicts"],
        "classes": sorted(set(predictions.values()) | {"Empty"}),
        "abox": {"concept_assertions": ca, "role_assertions": ra},
        "exemplars": list(labels),
        "predictions": {"default": predictions},
    }


@pytest.fixture
def ranked():
    doc = single_node_dataset(
        {"c1": ["B"], "c2": ["C"], "c3": ["B", "C", "D", "E"], "s": ["A"]},
        {"c1": "T", "c2": "T", "c3": "T", "s": "S"},
        concepts=["A", "B", "C", "D", "E"],
    )
    ds = dataset_from_dict(doc)
    cm = CostModel(build_tbox_graph(ds))
    return ds, cm, preprocess(ds, cm)


def test_toy_matrix(toy, toy_cm):
    cache = preprocess(toy, toy_cm)
    assert cache.matrix == [[0, 4], [4, 0]]
    assert cache.symmetric
    assert list(cache.paths) == [("e1", "e2")]
    assert cache.path("e2", "e1").total_cost == 4


def test_three_exemplars_zero_diagonal():
    doc = single_node_dataset({"x": ["A"], "y": ["B"], "z": []}, {"x": "P", "y": "P", "z": "Q"}, ["A", "B"])
    ds = dataset_from_dict(doc)
    cache = preprocess(ds, CostModel(build_tbox_graph(ds)))
    assert len(cache.matrix) == 3
    assert all(cache.matrix[i][i] == 0 for i in range(3))
    assert cache.matrix == [list(r) for r in zip(*cache.matrix)]
    assert cache.matrix[0][1] == 2 and cache.matrix[0][2] == 1


def test_save_load_round_trip(tmp_path, toy, toy_cm):
    cache = preprocess(toy, toy_cm)
    path = save_cache(cache, tmp_path / ("toy" + CACHE_SUFFIX))
    loaded = load_cache(path, toy, toy_cm)
    assert loaded == cache
    assert loaded.path("e1", "e2") == cache.path("e1", "e2")
    assert loaded.to_bytes() == cache.to_bytes()


def test_cache_file_layout(tmp_path, toy, toy_cm):
    path = save_cache(preprocess(toy, toy_cm), tmp_path / "c.semcf-cache")
    lines = path.read_text().splitlines()
    manifest = json.loads(lines[0])
    for key in ("version", "dataset_sha256", "costs_sha256", "backend", "symmetric", "n_exemplars", "created_utc"):
        assert key in manifest
    assert json.loads(lines[1]) == [0, 4, 4, 0]
    assert len(lines) == 3 and json.loads(lines[2])["source"] == "e1"


def test_stale_after_editing_an_assertion(tmp_path, toy_doc, toy, toy_cm):
    path = save_cache(preprocess(toy, toy_cm), tmp_path / "c.semcf-cache")
    toy_doc["abox"]["concept_assertions"][1]["concept"] = "Bedroom"
    edited = dataset_from_dict(toy_doc)
    with pytest.raises(StaleCacheError, match="re-run preprocess"):
        load_cache(path, edited, CostModel(build_tbox_graph(edited)))


def test_stale_after_changing_costs(tmp_path, toy, toy_cm):
    path = save_cache(preprocess(toy, toy_cm), tmp_path / "c.semcf-cache")
    cm = CostModel(build_tbox_graph(toy), parse_overrides('[{"from": "Forest", "to": "Bedroom", "cost": 7}]'))
    with pytest.raises(StaleCacheError):
        load_cache(path, toy, cm)


def test_prediction_overlay_keeps_cache_valid(tmp_path, toy, toy_cm):
    path = save_cache(preprocess(toy, toy_cm), tmp_path / "c.semcf-cache")
    other = overlay_predictions(toy, "second", {"e1": "DomesticAnimal", "e2": "WildAnimal"})
    assert dataset_fingerprint(other) == dataset_fingerprint(toy)
    load_cache(path, other, toy_cm)


def test_future_version_rejected(tmp_path, toy, toy_cm):
    path = save_cache(preprocess(toy, toy_cm), tmp_path / "c.semcf-cache")
    lines = path.read_text().split("\n")
    manifest = json.loads(lines[0])
    manifest["version"] = 99
    lines[0] = json.dumps(manifest)
    path.write_text("\n".join(lines))
    with pytest.raises(UnsupportedCacheVersionError):
        read_cache(path)


def test_nearest_ties_by_id(ranked):
    ds, _, cache = ranked
    assert list(nearest_by_class(cache, ds, "s", "T", k=2)) == [("c1", 2), ("c2", 2)]
    assert list(nearest_by_class(cache, ds, "s", "T", k=10)) == [("c1", 2), ("c2", 2), ("c3", 5)]


def test_nearest_empty_class(ranked):
    ds, _, cache = ranked
    res = nearest_by_class(cache, ds, "s", "Empty")
    assert len(res) == 0 and res.status == "no finite candidates"
    with pytest.raises(DatasetError):
        nearest_by_class(cache, ds, "s", "Nope")
    with pytest.raises(ValueError):
        nearest_by_class(cache, ds, "s", "T", k=0)


def test_nearest_same_class_excludes_only_source(ranked):
    ds, _, cache = ranked
    assert [e for e, _ in nearest_by_class(cache, ds, "c1", "T", k=5)] == ["c2", "c3"]


def test_nearest_scans_one_row(ranked):
    ds, _, cache = ranked
    cache.lookups = 0
    nearest_by_class(cache, ds, "s", "T")
    assert 0 < cache.lookups <= len(ds.exemplars)


def test_asymmetric_overrides_store_both_directions():
    doc = single_node_dataset({"x": ["A"], "y": ["B"]}, {"x": "P", "y": "Q"}, ["A", "B"])
    ds = dataset_from_dict(doc)
    cm = CostModel(build_tbox_graph(ds), {(concept("A"), concept("B")): 9})
    cache = preprocess(ds, cm)
    assert not cache.symmetric and cache.metadata["asymmetric_overrides"]
    assert set(cache.paths) == {("x", "y"), ("y", "x")}
    # equal-sized labels are matched without TOP padding, so the override is charged
    assert cache.matrix[0][1] == 9 and cache.matrix[1][0] == 2
    assert cache.path("y", "x").total_cost == 2


def test_infeasible_pair_stored_as_infinite():
    doc = single_node_dataset({"x": ["A"], "y": ["B"]}, {"x": "P", "y": "Q"}, ["A", "B"])
    ds = dataset_from_dict(doc)
    cm = CostModel(build_tbox_graph(ds), parse_overrides(
        '[{"from": "A", "to": "B", "cost": "inf"}, {"from": "B", "to": "A", "cost": "inf"},'
        ' {"from": "A", "to": "TOP", "cost": "inf"}, {"from": "TOP", "to": "A", "cost": "inf"}]'))
    cache = preprocess(ds, cm)
    assert cache.matrix[0][1] == INF
    assert cache.path("x", "y") is None
    assert len(nearest_by_class(cache, ds, "x", "Q")) == 0


def test_graph_backend(toy, toy_cm):
    cache = preprocess(toy, toy_cm, PreprocessOptions(backend="graph"))
    assert cache.backend == "graph" and cache.matrix[0][1] == 2
    with pytest.raises(PreprocessError, match="node budget"):
        preprocess(toy, toy_cm, PreprocessOptions(backend="graph", node_budget=2))


def test_options_validation():
    with pytest.raises(ValueError):
        PreprocessOptions(backend="fuzzy")
    with pytest.raises(ValueError):
        PreprocessOptions(node_budget=1)


def test_resolve_exemplars(toy):
    assert resolve_exemplars(toy, "WildAnimal") == ["e1"]
    assert resolve_exemplars(toy, ["e2"]) == ["e2"]
    with pytest.raises(KeyError):
        resolve_exemplars(toy, ["nobody"])


def test_progress_callback(toy, toy_cm):
    seen = []
    preprocess(toy, toy_cm, progress=lambda done, total: seen.append((done, total)))
    assert seen[-1] == (1, 1)


@given(st.integers(0, 10**6))
@settings(max_examples=8, deadline=None)
def test_parallelism_does_not_change_payload(seed):
    ds = dataset_from_dict(random_dataset_doc(random.Random(seed), n_exemplars=7))
    cm = CostModel(build_tbox_graph(ds))
    one = preprocess(ds, cm, jobs=1)
    many = preprocess(ds, cm, jobs=3)
    assert one.payload_bytes() == many.payload_bytes()
    # completeness and path coherence over every stored pair
    d = describe_all(exemplar_components(ds))
    n = len(ds.exemplars)
    for i, a in enumerate(ds.exemplars):
        for j, b in enumerate(ds.exemplars):
            if i != j:
                p = one.path(a, b)
                assert p.total_cost == one.matrix[i][j]
                assert apply_edit_path(d[a], p).same_labels(d[b])
    assert len(one.paths) == n * (n - 1) // 2
