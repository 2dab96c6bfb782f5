"""Pairwise preprocessing of all exemplars, the on-disk distance cache, and nearest-exemplar queries.

Cache file layout (UTF-8, newline separated):

    line 1      manifest JSON object (sorted keys)
    line 2      JSON array: the n x n distance matrix in row-major order
    line 3..    one JSON edit-path record per stored ordered pair

Costs that are infinite are written as the string ``"inf"``.
"""

from __future__ import annotations

import datetime as _dt
import gc
import hashlib
import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .costs import INF, CostModel, overrides_to_json
from .ged import DEFAULT_NODE_BUDGET, GedBudgetError, exact_ged
from .kb import (
    DEFAULT_TABLE,
    DatasetError,
    ExplanationDataset,
    UnknownExemplarError,
    dataset_to_dict,
    exemplar_components,
)
from .matching import InfeasibleMatchingError
from .rollup import describe_all
from .setdist import EditPath, SetEditDistance

CACHE_VERSION = 1
CACHE_SUFFIX = ".semcf-cache"
BACKENDS = ("set", "graph")


class CacheError(Exception):
    pass


class StaleCacheError(CacheError):
    pass


class UnsupportedCacheVersionError(CacheError):
    pass


class PreprocessError(RuntimeError):
    pass


@dataclass(frozen=True)
class PreprocessOptions:
    backend: str = "set"
    unlabeled_filler_as_top: bool = False
    node_budget: int = DEFAULT_NODE_BUDGET
    ged_timeout: float | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.node_budget < 2:
            raise ValueError("node budget must be at least 2")


def _sha256_json(obj) -> str:
    data = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


def dataset_fingerprint(ds: ExplanationDataset) -> str:
    """Hash of the canonical dataset content that distances depend on.

    Prediction tables and class labels are left out so that overlaying another
    classifier's predictions does not invalidate preprocessing.
    """
    doc = dataset_to_dict(ds)
    doc.pop("predictions")
    doc.pop("classes")
    return _sha256_json(doc)


def costs_fingerprint(cm: CostModel, options: PreprocessOptions) -> str:
    weights = cm.tbox_graph.weights
    return _sha256_json({
        "overrides": overrides_to_json(cm.overrides),
        "edge_weights": sorted([a, b, w] for (a, b), w in weights.items()) if weights else None,
        "unlabeled_filler_as_top": options.unlabeled_filler_as_top,
        "node_budget": options.node_budget if options.backend == "graph" else None,
    })


@dataclass
class DistanceCache:
    exemplars: tuple[str, ...]
    backend: str
    dataset_sha256: str
    costs_sha256: str
    symmetric: bool
    matrix: list[list[float]]
    paths: Mapping[tuple[str, str], EditPath]
    created_utc: str = ""
    version: int = CACHE_VERSION
    metadata: dict = field(default_factory=dict)
    lookups: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        self._index = {e: i for i, e in enumerate(self.exemplars)}

    def index(self, exemplar: str) -> int:
        try:
            return self._index[exemplar]
        except KeyError:
            raise UnknownExemplarError(f"exemplar {exemplar!r} is not in the cache") from None

    def distance(self, source: str, target: str) -> float:
        self.lookups += 1
        return self.matrix[self.index(source)][self.index(target)]

    def path(self, source: str, target: str) -> EditPath | None:
        """Stored edit path from *source* to *target* (reversed from the other direction when symmetric)."""
        p = self.paths.get((source, target))
        if p is not None:
            return p
        if source == target:
            return EditPath(source, target, (), 0)
        if self.symmetric:
            q = self.paths.get((target, source))
            if q is not None:
                return q.reversed()
        return None

    # -- serialization ----------------------------------------------------

    def manifest(self) -> dict:
        return {
            "version": self.version,
            "dataset_sha256": self.dataset_sha256,
            "costs_sha256": self.costs_sha256,
            "backend": self.backend,
            "symmetric": self.symmetric,
            "n_exemplars": len(self.exemplars),
            "created_utc": self.created_utc,
            "exemplars": list(self.exemplars),
            "metadata": self.metadata,
        }

    def to_bytes(self, include_timestamp: bool = True) -> bytes:
        manifest = self.manifest()
        if not include_timestamp:
            manifest["created_utc"] = ""
        lines = [json.dumps(manifest, sort_keys=True, separators=(",", ":"), ensure_ascii=False)]
        flat = [_cost_out(d) for row in self.matrix for d in row]
        lines.append(json.dumps(flat, separators=(",", ":")))
        for key in sorted(self.paths, key=lambda k: (self.index(k[0]), self.index(k[1]))):
            lines.append(json.dumps(self.paths[key].to_record(), separators=(",", ":"), ensure_ascii=False))
        return ("\n".join(lines) + "\n").encode("utf-8")

    def payload_bytes(self) -> bytes:
        """Serialized cache with the creation timestamp blanked, for determinism checks."""
        return self.to_bytes(include_timestamp=False)


def _cost_out(c: float):
    if c == INF:
        return "inf"
    return c


def _cost_in(c) -> float:
    return INF if c == "inf" else c


# --------------------------------------------------------------------------
# preprocessing

_WORKER: dict = {}


def _init_worker(state: dict) -> None:
    _WORKER.clear()
    _WORKER.update(state)
    if state["backend"] == "set":
        _WORKER["sed"] = SetEditDistance(state["cm"])


def _compute(i: int, j: int) -> tuple[float, EditPath | None, bool]:
    st = _WORKER
    src, dst = st["exemplars"][i], st["exemplars"][j]
    try:
        if st["backend"] == "set":
            d = st["descriptions"]
            path = st["sed"].description_distance(d[src], d[dst])
            return path.total_cost, path, True
        comps = st["components"]
        res = exact_ged(st["cm"], comps[src], comps[dst], st["node_budget"], st["ged_timeout"])
        if res.cost == INF:
            return INF, None, res.optimal
        return res.cost, res.to_edit_path(src, dst), res.optimal
    except InfeasibleMatchingError:
        return INF, None, True
    except GedBudgetError as exc:
        raise PreprocessError(f"pair ({src}, {dst}): {exc}") from None


@contextmanager
def _gc_paused():
    # the distance code creates no reference cycles, while the cyclic
    # collector would rescan millions of live path objects over and over
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def _run_chunk(tasks: list[tuple[int, int]]) -> list[tuple[int, int, float, EditPath | None, bool]]:
    with _gc_paused():
        return [(i, j, *_compute(i, j)) for i, j in tasks]


def _chunks(tasks: list, n_chunks: int) -> list[list]:
    n_chunks = max(1, min(n_chunks, len(tasks)))
    size, extra = divmod(len(tasks), n_chunks)
    out, start = [], 0
    for c in range(n_chunks):
        stop = start + size + (1 if c < extra else 0)
        out.append(tasks[start:stop])
        start = stop
    return out


def preprocess(
    ds: ExplanationDataset,
    cm: CostModel,
    options: PreprocessOptions | None = None,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> DistanceCache:
    """Compute edit paths between all pairs of exemplars.

    Pairs of the upper triangle are split into contiguous chunks handed out
    to *jobs* worker processes; each result lands in its own slot, so the
    cache does not depend on *jobs*.  With asymmetric cost overrides both
    directions of every pair are computed and stored.
    """
    options = options or PreprocessOptions()
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    exemplars = tuple(ds.exemplars)
    n = len(exemplars)
    symmetric = cm.symmetric
    comps = exemplar_components(ds)
    state = {
        "backend": options.backend,
        "cm": cm,
        "exemplars": exemplars,
        "node_budget": options.node_budget,
        "ged_timeout": options.ged_timeout,
    }
    if options.backend == "set":
        state["descriptions"] = describe_all(comps, options.unlabeled_filler_as_top)
    else:
        for e, c in comps.items():
            if len(c.nodes) > options.node_budget:
                raise PreprocessError(
                    f"exemplar {e!r}: component of {len(c.nodes)} nodes exceeds the node budget of {options.node_budget}"
                )
        state["components"] = comps

    tasks = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not symmetric:
        tasks = [t for i, j in tasks for t in ((i, j), (j, i))]
    chunks = _chunks(tasks, jobs * 4)
    results: list[list] = [None] * len(chunks)  # type: ignore[list-item]
    done = 0
    with _gc_paused():
        if jobs == 1 or len(chunks) <= 1:
            _init_worker(state)
            for c, chunk in enumerate(chunks):
                results[c] = _run_chunk(chunk)
                done += len(chunk)
                if progress:
                    progress(done, len(tasks))
        else:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx, initializer=_init_worker,
                                     initargs=(state,)) as pool:
                futures = [pool.submit(_run_chunk, chunk) for chunk in chunks]
                for c, fut in enumerate(futures):
                    results[c] = fut.result()
                    done += len(chunks[c])
                    if progress:
                        progress(done, len(tasks))

        matrix = [[0 if i == j else INF for j in range(n)] for i in range(n)]
        paths: dict[tuple[str, str], EditPath] = {}
        non_optimal = 0
        for chunk in results:
            for i, j, cost, path, optimal in chunk:
                matrix[i][j] = cost
                if symmetric:
                    matrix[j][i] = cost
                non_optimal += not optimal
                if path is not None:
                    paths[(exemplars[i], exemplars[j])] = path
    metadata = {"options": {"unlabeled_filler_as_top": options.unlabeled_filler_as_top,
                            "node_budget": options.node_budget}}
    if not symmetric:
        metadata["asymmetric_overrides"] = True
    if non_optimal:
        metadata["non_optimal_pairs"] = non_optimal
    return DistanceCache(
        exemplars=exemplars,
        backend=options.backend,
        dataset_sha256=dataset_fingerprint(ds),
        costs_sha256=costs_fingerprint(cm, options),
        symmetric=symmetric,
        matrix=matrix,
        paths=paths,
        created_utc=_dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        metadata=metadata,
    )


# --------------------------------------------------------------------------
# persistence


def save_cache(cache: DistanceCache, destination) -> Path:
    path = Path(destination)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(cache.to_bytes())
    tmp.replace(path)
    return path


def read_cache(source, kinds: Mapping[str, str] | None = None) -> DistanceCache:
    """Read a cache file without checking it against a dataset."""
    with open(source, "rb") as fh:
        lines = fh.read().decode("utf-8").split("\n")
    try:
        manifest = json.loads(lines[0])
    except (json.JSONDecodeError, IndexError):
        raise CacheError(f"{source}: not a cache file") from None
    version = manifest.get("version")
    if version != CACHE_VERSION:
        raise UnsupportedCacheVersionError(
            f"{source}: cache version {version!r} is not supported (this build reads version {CACHE_VERSION})"
        )
    exemplars = tuple(manifest["exemplars"])
    n = len(exemplars)
    flat = [_cost_in(c) for c in json.loads(lines[1])]
    if len(flat) != n * n:
        raise CacheError(f"{source}: matrix has {len(flat)} entries, expected {n * n}")
    matrix = [flat[i * n:(i + 1) * n] for i in range(n)]
    records = {}
    for line in lines[2:]:
        if line:
            rec = json.loads(line)
            records[(rec["source"], rec["target"])] = rec
    paths = _LazyPaths(records, kinds)
    return DistanceCache(
        exemplars=exemplars,
        backend=manifest["backend"],
        dataset_sha256=manifest["dataset_sha256"],
        costs_sha256=manifest["costs_sha256"],
        symmetric=manifest["symmetric"],
        matrix=matrix,
        paths=paths,
        created_utc=manifest.get("created_utc", ""),
        version=version,
        metadata=manifest.get("metadata", {}),
    )


class _LazyPaths(Mapping):
    """Path records decoded into ``EditPath`` objects on first access.

    A query touches one or a few paths, so decoding all of them at load time
    would dominate the latency of ``explain`` on large caches.
    """

    def __init__(self, records: dict[tuple[str, str], dict], kinds: Mapping[str, str] | None):
        self._records = records
        self._kinds = kinds
        self._decoded: dict[tuple[str, str], EditPath] = {}

    def __getitem__(self, key: tuple[str, str]) -> EditPath:
        p = self._decoded.get(key)
        if p is None:
            p = self._decoded[key] = EditPath.from_record(self._records[key], self._kinds)
        return p

    def __iter__(self):
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        return key in self._records


def vocabulary_kinds(ds: ExplanationDataset) -> dict[str, str]:
    kinds = {c: "concept" for c in ds.vocabulary.concept_names}
    kinds.update({r: "role" for r in ds.vocabulary.role_names})
    return kinds


def load_cache(source, ds: ExplanationDataset, cm: CostModel, options: PreprocessOptions | None = None) -> DistanceCache:
    """Read a cache and check that it was built from *ds* under *cm* and *options*."""
    cache = read_cache(source, vocabulary_kinds(ds))
    if options is None:
        opts = cache.metadata.get("options", {})
        options = PreprocessOptions(backend=cache.backend, **opts)
    if cache.dataset_sha256 != dataset_fingerprint(ds):
        raise StaleCacheError(f"{source}: cache was built from a different dataset; re-run preprocess")
    if cache.costs_sha256 != costs_fingerprint(cm, options):
        raise StaleCacheError(f"{source}: cache was built with different cost settings; re-run preprocess")
    if cache.exemplars != tuple(ds.exemplars):
        raise StaleCacheError(f"{source}: exemplar list differs from the dataset; re-run preprocess")
    return cache


# --------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class NearestResult:
    items: tuple[tuple[str, float], ...]
    status: str = "ok"

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)


def nearest_by_class(
    cache: DistanceCache,
    ds: ExplanationDataset,
    source: str,
    target_class: str,
    k: int = 1,
    table: str = DEFAULT_TABLE,
) -> NearestResult:
    """The *k* nearest exemplars predicted as *target_class*, excluding *source*.

    A single pass over the source's cache row; ties are broken by exemplar id.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if target_class not in ds.classes:
        raise DatasetError(f"unknown class {target_class!r}")
    predictions = ds.table(table)
    row = cache.matrix[cache.index(source)]
    candidates = []
    for j, e in enumerate(cache.exemplars):
        if e == source or predictions.get(e) != target_class:
            continue
        cache.lookups += 1
        d = row[j]
        if d != INF:
            candidates.append((d, e))
    if not candidates:
        return NearestResult((), "no finite candidates")
    candidates.sort()
    return NearestResult(tuple((e, d) for d, e in candidates[:k]))


def resolve_exemplars(ds: ExplanationDataset, selector: str | Iterable[str], table: str = DEFAULT_TABLE) -> list[str]:
    """Exemplars named by a class label (by prediction) or an explicit list."""
    if isinstance(selector, str):
        predictions = ds.table(table)
        return [e for e in ds.exemplars if predictions.get(e) == selector]
    known = set(ds.exemplars)
    chosen = list(selector)
    for e in chosen:
        if e not in known:
            raise UnknownExemplarError(f"unknown exemplar {e!r}")
    return chosen


__all__ = [
    "DistanceCache", "PreprocessOptions", "preprocess", "save_cache", "load_cache", "read_cache",
    "nearest_by_class", "NearestResult", "CacheError", "StaleCacheError", "UnsupportedCacheVersionError",
    "PreprocessError", "dataset_fingerprint", "costs_fingerprint", "resolve_exemplars",
]
