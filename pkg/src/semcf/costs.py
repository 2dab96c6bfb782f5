"""Edit costs derived from shortest paths on the TBox graph."""

from __future__ import annotations

import heapq
import json
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .kb import TOP, TBoxGraph

INF = math.inf


class KindMismatchError(ValueError):
    """Raised when a concept is compared with a role."""


class Atom(NamedTuple):
    """An atomic concept, role, existential ``∃role.filler``, or ``TOP``.

    For existentials ``name`` is the role and ``filler`` the concept (or ``TOP``).
    """

    kind: str
    name: str
    filler: str | None = None

    def __str__(self) -> str:
        if self.kind == "exists":
            return f"exists:{self.name}:{self.filler}"
        return self.name

    def pretty(self) -> str:
        if self.kind == "exists":
            return f"∃{self.name}.{self.filler}"
        return self.name

    @property
    def is_top(self) -> bool:
        return self.kind == "top"


TOP_ATOM = Atom("top", TOP)


def concept(name: str) -> Atom:
    return TOP_ATOM if name == TOP else Atom("concept", name)


def role(name: str) -> Atom:
    return TOP_ATOM if name == TOP else Atom("role", name)


def exists(role_name: str, filler: str) -> Atom:
    return Atom("exists", role_name, filler)


def parse_atom(text: str, kinds: Mapping[str, str] | None = None) -> Atom:
    """Parse ``TOP``, ``exists:role:Filler`` or a plain name.

    Plain names are looked up in *kinds* (name -> "concept" | "role");
    without it they are taken to be concepts.
    """
    if text == TOP:
        return TOP_ATOM
    if text.startswith("exists:"):
        parts = text.split(":")
        if len(parts) != 3 or not parts[1] or not parts[2]:
            raise ValueError(f"bad existential atom {text!r}; expected 'exists:role:Concept'")
        return exists(parts[1], parts[2])
    kind = (kinds or {}).get(text, "concept")
    if kind == "role":
        return role(text)
    return concept(text)


def parse_cost(value: object) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return INF
        try:
            value = float(value)
        except ValueError:
            raise ValueError(f"bad cost {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"bad cost {value!r}")
    if math.isnan(value) or value < 0:
        raise ValueError(f"costs must be nonnegative, got {value!r}")
    return value


def parse_overrides(data: bytes | str, kinds: Mapping[str, str] | None = None) -> dict[tuple[Atom, Atom], float]:
    """Parse the cost-override JSON list ``[{"from":..,"to":..,"cost":..}, ...]``."""
    doc = json.loads(data)
    if not isinstance(doc, list):
        raise ValueError("cost overrides must be a JSON list")
    out: dict[tuple[Atom, Atom], float] = {}
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or not {"from", "to", "cost"} <= set(entry):
            raise ValueError(f"override[{i}] needs 'from', 'to' and 'cost'")
        src, dst = parse_atom(entry["from"], kinds), parse_atom(entry["to"], kinds)
        if src.is_top and dst.is_top:
            raise ValueError(f"override[{i}]: TOP -> TOP is not an edit")
        if src == dst:
            raise ValueError(f"override[{i}]: identity edits always cost 0")
        out[(src, dst)] = parse_cost(entry["cost"])
    return out


def overrides_to_json(overrides: Mapping[tuple[Atom, Atom], float]) -> list[dict]:
    return [
        {"from": str(a), "to": str(b), "cost": "inf" if math.isinf(c) else c}
        for (a, b), c in sorted(overrides.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))
    ]


@dataclass
class CostModel:
    """Edit-cost function over atoms.

    Replacement, insertion (``TOP -> x``) and deletion (``x -> TOP``) costs are
    undirected shortest-path lengths in the TBox graph; user overrides take
    precedence and may be asymmetric or infinite.  Shortest paths are computed
    one source at a time on demand and memoized.
    """

    tbox_graph: TBoxGraph
    overrides: Mapping[tuple[Atom, Atom], float] = field(default_factory=dict)
    _memo: dict[str, dict[str, float]] = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def symmetric(self) -> bool:
        return all(self.overrides.get((b, a)) == c for (a, b), c in self.overrides.items())

    def _kind(self, name: str) -> str:
        try:
            return self.tbox_graph.kinds[name]
        except KeyError:
            raise KeyError(f"unknown atom {name!r}") from None

    def _distances_from(self, source: str) -> dict[str, float]:
        row = self._memo.get(source)
        if row is not None:
            return row
        adj = self.tbox_graph.adjacency
        weights = self.tbox_graph.weights
        if weights is None:
            dist: dict[str, float] = {source: 0}
            queue = deque([source])
            while queue:
                n = queue.popleft()
                d = dist[n] + 1
                for m in adj[n]:
                    if m not in dist:
                        dist[m] = d
                        queue.append(m)
        else:
            dist = {source: 0}
            heap = [(0.0, source)]
            while heap:
                d, n = heapq.heappop(heap)
                if d > dist[n]:
                    continue
                for m in adj[n]:
                    nd = d + weights.get((n, m), 1.0)
                    if nd < dist.get(m, INF):
                        dist[m] = nd
                        heapq.heappush(heap, (nd, m))
        with self._lock:
            self._memo.setdefault(source, dist)
        return dist

    def atom_distance(self, x: str, y: str) -> float:
        """Undirected TBox-graph distance between two names (concepts, roles or ``TOP``)."""
        kx, ky = self._kind(x), self._kind(y)
        if "top" not in (kx, ky) and kx != ky:
            raise KindMismatchError(f"cannot compare {kx} {x!r} with {ky} {y!r}")
        return self._d(x, y)

    def _d(self, x: str, y: str) -> float:
        # callers guarantee x and y are of compatible kinds
        if x == y:
            return 0
        row = self._memo.get(x)
        if row is None:
            self._kind(x)
            row = self._distances_from(x)
        d = row.get(y)
        if d is None:
            self._kind(y)
            return INF
        return d

    def edit_cost(self, src: Atom, dst: Atom) -> float:
        ks, kd = src.kind, dst.kind
        if ks == "top" and kd == "top":
            raise ValueError("TOP -> TOP is not an edit")
        if src == dst:
            return 0
        if self.overrides:
            o = self.overrides.get((src, dst))
            if o is not None:
                return o
        d = self._d
        if ks == "exists":
            if kd == "exists":
                return d(src.name, dst.name) + d(src.filler, dst.filler)
            if kd == "top":
                return d(src.name, TOP) + d(src.filler, TOP)
            if kd == "role":
                raise KindMismatchError(f"cannot replace {src.pretty()} with {dst.pretty()}")
            # existential -> atomic concept: delete then insert
            return self.edit_cost(src, TOP_ATOM) + self.edit_cost(TOP_ATOM, dst)
        if kd == "exists":
            if ks == "top":
                return d(dst.name, TOP) + d(dst.filler, TOP)
            if ks == "role":
                raise KindMismatchError(f"cannot replace {src.pretty()} with {dst.pretty()}")
            return self.edit_cost(src, TOP_ATOM) + self.edit_cost(TOP_ATOM, dst)
        if ks != kd and "top" not in (ks, kd):
            raise KindMismatchError(f"cannot replace {ks} {src.name!r} with {kd} {dst.name!r}")
        return d(src.name, dst.name)

    def deletion_cost(self, atoms) -> float:
        return sum(self.edit_cost(a, TOP_ATOM) for a in atoms)

    def insertion_cost(self, atoms) -> float:
        return sum(self.edit_cost(TOP_ATOM, a) for a in atoms)
