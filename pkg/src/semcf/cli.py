"""``semcf`` command line: validate, describe, distance, preprocess, explain, global, cache-info.

Exit codes: 0 success, 1 validation violations, 2 usage or operational errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .costs import INF, CostModel, KindMismatchError, parse_overrides
from .explain import EmptySelectorError, counterfactual, global_importance
from .ged import GedBudgetError, exact_ged
from .kb import (
    DEFAULT_TABLE,
    DatasetError,
    ExplanationDataset,
    build_tbox_graph,
    exemplar_components,
    load_dataset,
    overlay_predictions,
    validate_dataset,
)
from .matching import InfeasibleMatchingError
from .rollup import roll_up
from .setdist import SetEditDistance
from .store import (
    CACHE_SUFFIX,
    CacheError,
    PreprocessError,
    PreprocessOptions,
    load_cache,
    preprocess,
    read_cache,
    save_cache,
    vocabulary_kinds,
)

EXIT_OK, EXIT_VIOLATIONS, EXIT_ERROR = 0, 1, 2
CACHE_DIR_ENV = "SEMCF_CACHE_DIR"


class CliError(Exception):
    """Operational failure reported as ``semcf: error: ...`` with exit code 2."""


def _fmt_cost(c: float) -> str:
    if c == INF:
        return "inf"
    return str(int(c)) if float(c).is_integer() else repr(c)


def _json_cost(c: float):
    return "inf" if c == INF else c


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False)


# --------------------------------------------------------------------------
# loading helpers


def _load_dataset(path: str, predictions: Sequence[str] = ()) -> ExplanationDataset:
    ds = load_dataset(path)
    for p in predictions:
        with open(p, "rb") as fh:
            tables = json.loads(fh.read())
        if not isinstance(tables, dict) or not all(isinstance(t, dict) for t in tables.values()):
            raise CliError(f"{p}: expected a JSON object mapping table id to {{exemplar: class}}")
        for table_id, table in sorted(tables.items()):
            ds = overlay_predictions(ds, table_id, table)
    return ds


def _cost_model(ds: ExplanationDataset, overrides: str | None) -> CostModel:
    graph = build_tbox_graph(ds)
    if not overrides:
        return CostModel(graph)
    with open(overrides, "rb") as fh:
        parsed = parse_overrides(fh.read(), vocabulary_kinds(ds))
    for pair in parsed:
        for atom in pair:
            names = [atom.name] + ([atom.filler] if atom.filler is not None else [])
            for name in names:
                if name not in graph.kinds:
                    raise CliError(f"{overrides}: override names unknown atom {name!r}")
    return CostModel(graph, parsed)


def _options(args) -> PreprocessOptions:
    return PreprocessOptions(
        backend=args.backend,
        unlabeled_filler_as_top=args.unlabeled_filler_as_top,
        node_budget=args.node_budget,
        ged_timeout=args.timeout,
    )


def _cache_dir() -> Path:
    return Path(os.environ.get(CACHE_DIR_ENV) or ".")


def _resolve_cache(name: str) -> Path:
    """A cache path as given, else looked up (with or without suffix) in ``$SEMCF_CACHE_DIR``."""
    candidates = [Path(name), Path(name + CACHE_SUFFIX)]
    if not Path(name).is_absolute():
        candidates += [_cache_dir() / name, _cache_dir() / (name + CACHE_SUFFIX)]
    for c in candidates:
        if c.is_file():
            return c
    raise CliError(f"cache {name!r} not found (also looked in ${CACHE_DIR_ENV}={_cache_dir()})")


def _open_cache(args):
    """Load the cache named by ``--cache`` together with its dataset and cost model."""
    path = _resolve_cache(args.cache)
    raw = read_cache(path)
    dataset = args.dataset or raw.metadata.get("dataset_path")
    if not dataset:
        raise CliError(f"{path}: cache does not record its dataset; pass --dataset")
    overrides = args.overrides if args.overrides is not None else raw.metadata.get("overrides_path")
    ds = _load_dataset(dataset, args.predictions)
    cm = _cost_model(ds, overrides)
    return load_cache(path, ds, cm), ds


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args, out) -> int:
    ds = _load_dataset(args.dataset, args.predictions)
    report = validate_dataset(ds, role_class_collision=args.role_class_collision)
    if args.format == "json":
        print(_dump({
            "violations": [vars(v) for v in report.violations],
            "warnings": list(ds.warnings),
        }), file=out)
    else:
        for w in ds.warnings:
            print(f"warning: {w}", file=out)
        for v in report.violations:
            print(v, file=out)
        print(f"{len(report.errors)} violations", file=out)
    return EXIT_VIOLATIONS if report.errors else EXIT_OK


def cmd_describe(args, out) -> int:
    ds = _load_dataset(args.dataset)
    comps = exemplar_components(ds)
    chosen = args.exemplars or list(ds.exemplars)
    docs = []
    for e in chosen:
        if e not in comps:
            raise CliError(f"unknown exemplar {e!r}")
        docs.append(roll_up(comps[e], args.unlabeled_filler_as_top).to_json())
    print(_dump(docs if len(docs) != 1 else docs[0]), file=out)
    return EXIT_OK


def cmd_distance(args, out) -> int:
    ds = _load_dataset(args.dataset)
    cm = _cost_model(ds, args.overrides)
    comps = exemplar_components(ds)
    for e in (args.source, args.target):
        if e not in comps:
            raise CliError(f"unknown exemplar {e!r}")
    a, b = comps[args.source], comps[args.target]
    optimal = True
    if args.backend == "graph":
        res = exact_ged(cm, a, b, args.node_budget, args.timeout)
        cost, optimal = res.cost, res.optimal
        ops = [{"kind": op.kind, "source": op.source, "target": op.target, "cost": _json_cost(op.cost),
                "edits": [str(e) for e in op.edits]} for op in res.ops]
        lines = [str(op) for op in res.ops]
    else:
        flag = args.unlabeled_filler_as_top
        try:
            path = SetEditDistance(cm).description_distance(roll_up(a, flag), roll_up(b, flag))
        except InfeasibleMatchingError:
            path = None
        cost = path.total_cost if path else INF
        ops = [{"from": str(op.src), "to": str(op.dst), "cost": _json_cost(op.cost), "site": op.site,
                "target_site": op.target_site} for op in (path.ops if path else ())]
        lines = [f"{op}  cost {_fmt_cost(op.cost)}  at {op.site or '-'} -> {op.target_site or '-'}"
                 for op in (path.ops if path else ())]
    if args.format == "json":
        doc = {"source": args.source, "target": args.target, "backend": args.backend,
               "cost": _json_cost(cost), "optimal": optimal}
        if args.show_path:
            doc["ops"] = ops
        print(_dump(doc), file=out)
    else:
        note = "" if optimal else " (not proven optimal: timeout)"
        print(f"d({args.source}, {args.target}) = {_fmt_cost(cost)}{note}", file=out)
        if args.show_path:
            for line in lines:
                print(f"  {line}", file=out)
    return EXIT_OK


def cmd_preprocess(args, out) -> int:
    if args.jobs < 1:
        raise CliError("--jobs must be at least 1")
    ds = _load_dataset(args.dataset)
    cm = _cost_model(ds, args.overrides)
    options = _options(args)
    dest = Path(args.out) if args.out else _cache_dir() / (Path(args.dataset).stem + CACHE_SUFFIX)

    def progress(done: int, total: int) -> None:
        print(f"\r{done}/{total} pairs", end="", file=sys.stderr, flush=True)

    cache = preprocess(ds, cm, options, jobs=args.jobs, progress=progress if args.progress else None)
    if args.progress:
        print(file=sys.stderr)
    cache.metadata["dataset_path"] = str(Path(args.dataset).resolve())
    if args.overrides:
        cache.metadata["overrides_path"] = str(Path(args.overrides).resolve())
    dest.parent.mkdir(parents=True, exist_ok=True)
    save_cache(cache, dest)
    print(f"wrote {dest} ({len(cache.exemplars)} exemplars, backend {cache.backend})", file=out)
    return EXIT_OK


def cmd_explain(args, out) -> int:
    if args.k < 1:
        raise CliError("--k must be at least 1")
    cache, ds = _open_cache(args)
    xs = counterfactual(cache, ds, args.source, args.target, args.k, args.table)
    if args.format == "json":
        print(_dump({"source": args.source, "target_class": args.target,
                     "status": "ok" if xs else "no finite candidates",
                     "explanations": [x.to_json() for x in xs]}), file=out)
        return EXIT_OK
    if not xs:
        print(f"no counterfactual for {args.source} in class {args.target}: no finite candidates", file=out)
        return EXIT_OK
    for rank, x in enumerate(xs, 1):
        print(f"{rank}. {x.source} -> {x.counterfactual} ({x.target_class}), cost {_fmt_cost(x.edits.total_cost)}",
              file=out)
        if x.collapsed_abox_edits is not None:
            for edit in x.collapsed_abox_edits:
                print(f"   {edit}", file=out)
        else:
            for op in x.edits.ops:
                print(f"   {op}", file=out)
    return EXIT_OK


def cmd_global(args, out) -> int:
    cache, ds = _open_cache(args)
    if args.sources:
        selector: str | list[str] = [s for s in args.sources.split(",") if s]
    else:
        selector = args.source_class
    report = global_importance(cache, ds, selector, args.target, args.table)
    text = report.render(args.format)
    print(text.rstrip("\n"), file=out)
    return EXIT_OK


def cmd_cache_info(args, out) -> int:
    cache = read_cache(_resolve_cache(args.cache))
    manifest = cache.manifest()
    if not args.exemplars:
        manifest.pop("exemplars")
    manifest["stored_paths"] = len(cache.paths)
    print(_dump(manifest), file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_cost_flags(p: argparse.ArgumentParser, backend: bool = True) -> None:
    p.add_argument("--overrides", help="cost-override JSON file")
    p.add_argument("--unlabeled-filler-as-top", action="store_true",
                   help="roll r(a,b) with an unlabeled b up into exists r.TOP")
    if backend:
        p.add_argument("--backend", choices=("set", "graph"), default="set")
        p.add_argument("--node-budget", type=int, default=10, help="graph backend: max nodes per component")
        p.add_argument("--timeout", type=float, default=None, help="graph backend: seconds per pair")


def _add_cache_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache", required=True, help=f"cache file (also looked up in ${CACHE_DIR_ENV})")
    p.add_argument("--dataset", help="dataset JSON (default: the path recorded in the cache)")
    p.add_argument("--overrides", default=None, help="cost-override JSON (default: as recorded in the cache)")
    p.add_argument("--predictions", action="append", default=[],
                   help="extra prediction tables: JSON {table: {exemplar: class}}; repeatable")
    p.add_argument("--table", default=DEFAULT_TABLE, help="prediction table to query")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcf", description="Counterfactual explanations as knowledge-graph edits.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check a dataset against its structural rules")
    p.add_argument("dataset")
    p.add_argument("--predictions", action="append", default=[])
    p.add_argument("--role-class-collision", choices=("error", "warning"), default="error",
                   help="severity when a class label is also a role name")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("describe", help="print rolled-up concept-set descriptions")
    p.add_argument("dataset")
    p.add_argument("exemplars", nargs="*")
    p.add_argument("--unlabeled-filler-as-top", action="store_true")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("distance", help="edit distance between two exemplars")
    p.add_argument("dataset")
    p.add_argument("source")
    p.add_argument("target")
    _add_cost_flags(p)
    p.add_argument("--show-path", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("preprocess", help="compute and cache all pairwise edit paths")
    p.add_argument("dataset")
    _add_cost_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help=f"cache file (default: ${CACHE_DIR_ENV} or ., named after the dataset)")
    p.add_argument("--progress", action="store_true", help="report progress on stderr")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("explain", help="nearest counterfactuals of a target class")
    _add_cache_flags(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True, help="target class")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("global", help="atom importance over many explanations")
    _add_cache_flags(p)
    who = p.add_mutually_exclusive_group(required=True)
    who.add_argument("--source-class", help="all exemplars predicted as this class")
    who.add_argument("--sources", help="comma-separated exemplar list")
    p.add_argument("--target", required=True, help="target class")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=cmd_global)

    p = sub.add_parser("cache-info", help="print a cache manifest")
    p.add_argument("cache")
    p.add_argument("--exemplars", action="store_true", help="include the exemplar list")
    p.set_defaults(func=cmd_cache_info)
    return parser


_OPERATIONAL = (
    CliError, DatasetError, CacheError, PreprocessError, GedBudgetError, KindMismatchError,
    EmptySelectorError, InfeasibleMatchingError, OSError, ValueError, KeyError,
)


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except _OPERATIONAL as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"semcf: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
