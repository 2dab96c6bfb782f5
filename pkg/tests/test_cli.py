import csv
import io
import json

import pytest

from semcf.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture
def cache_file(tmp_path, toy_path):
    path = tmp_path / "toy.semcf-cache"
    code, _ = run("preprocess", str(toy_path), "--out", str(path))
    assert code == 0 and path.is_file()
    return path


def test_validate_clean(toy_path):
    code, out = run("validate", str(toy_path))
    assert code == 0
    assert out.strip().splitlines()[-1] == "0 violations"


def test_validate_reports_violations(tmp_path, toy_doc):
    toy_doc["predictions"]["default"]["e2"] = "Robot"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(toy_doc))
    code, out = run("validate", str(bad))
    assert code == 1
    assert "unknown-class" in out and out.strip().endswith("1 violations")
    code, out = run("validate", str(bad), "--format", "json")
    assert code == 1 and json.loads(out)["violations"][0]["location"] == "predictions.default.e2"


def test_distance_backends(toy_path):
    code, out = run("distance", str(toy_path), "e1", "e2")
    assert code == 0 and out.split("=")[-1].strip().split()[0] == "4"
    code, out = run("distance", str(toy_path), "e1", "e2", "--backend", "graph", "--format", "json")
    assert code == 0 and json.loads(out)["cost"] == 2


def test_describe(toy_path):
    code, out = run("describe", str(toy_path), "e1")
    assert code == 0
    doc = json.loads(out)
    assert doc["exemplar"] == "e1"
    assert [l["atoms"] for l in doc["labels"]] == [["Animal", "exists:isIn:Forest"], ["Forest"]]


def test_explain_toy(cache_file):
    code, out = run("explain", "--cache", str(cache_file), "--source", "e1", "--target", "DomesticAnimal")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "1. e1 -> e2 (DomesticAnimal), cost 4"
    assert lines[1].strip() == "replace Forest(b) with Bedroom(b)"


def test_explain_json(cache_file):
    code, out = run("explain", "--cache", str(cache_file), "--source", "e1", "--target", "DomesticAnimal",
                    "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert json.dumps(doc)  # plain JSON types only


def test_outputs_are_byte_identical(cache_file):
    argv = ("explain", "--cache", str(cache_file), "--source", "e1", "--target", "DomesticAnimal", "--format", "json")
    assert run(*argv) == run(*argv)


def test_cache_lookup_through_env(monkeypatch, cache_file):
    monkeypatch.setenv("SEMCF_CACHE_DIR", str(cache_file.parent))
    code, out = run("explain", "--cache", "toy", "--source", "e1", "--target", "DomesticAnimal")
    assert code == 0 and out.startswith("1. e1 -> e2")


def test_preprocess_default_location(monkeypatch, tmp_path, toy_path):
    monkeypatch.setenv("SEMCF_CACHE_DIR", str(tmp_path))
    assert run("preprocess", str(toy_path))[0] == 0
    assert (tmp_path / "animals.semcf-cache").is_file()


def test_global_formats(cache_file):
    base = ("global", "--cache", str(cache_file), "--source-class", "WildAnimal", "--target", "DomesticAnimal")
    code, out = run(*base, "--format", "csv")
    assert code == 0
    rows = {r["atom"]: float(r["importance"]) for r in csv.DictReader(io.StringIO(out))}
    assert rows["Bedroom"] == 1.0 and rows["Forest"] == -1.0
    code, out = run(*base, "--format", "json")
    assert code == 0 and json.loads(out)["n_explanations"] == 1
    code, out = run("global", "--cache", str(cache_file), "--sources", "e1,e2", "--target", "DomesticAnimal")
    assert code == 0


def test_cache_info(cache_file):
    code, out = run("cache-info", str(cache_file), "--exemplars")
    assert code == 0
    info = json.loads(out)
    assert info["n_exemplars"] == 2


def test_missing_cache_is_an_error(tmp_path, capsys):
    code, _ = run("explain", "--cache", str(tmp_path / "nope"), "--source", "e1", "--target", "X")
    assert code == 2
    assert "semcf: error:" in capsys.readouterr().err


def test_usage_errors():
    assert run("explain", "--bogus")[0] == 2
    assert run()[0] == 2
    assert run("--help")[0] == 0


def test_stale_cache_is_reported(tmp_path, toy_doc, cache_file, capsys):
    toy_doc["abox"]["concept_assertions"][1]["concept"] = "Bedroom"
    edited = tmp_path / "edited.json"
    edited.write_text(json.dumps(toy_doc))
    code, _ = run("explain", "--cache", str(cache_file), "--dataset", str(edited),
                  "--source", "e1", "--target", "DomesticAnimal")
    assert code == 2
    assert "re-run preprocess" in capsys.readouterr().err
