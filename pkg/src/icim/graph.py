"""Directed social graphs with per-edge influence probabilities on an epsilon grid.

Nodes are dense integer ids ``0..n-1``. Edges are stored sorted by ``(src, dst)``
and every per-edge array in the package (probabilities, coin flips, reports) is
indexed in that canonical order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

GRID_TOL = 1e-9

Source = Union[str, bytes, os.PathLike, IO]


class GraphFormatError(ValueError):
    """Malformed or invalid graph / report input."""


def grid_steps(epsilon: float) -> int:
    """Number of grid intervals ``1/epsilon``; raises if that is not an integer."""
    if not (0.0 < epsilon <= 1.0):
        raise GraphFormatError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    steps = 1.0 / epsilon
    r = round(steps)
    if abs(steps - r) > GRID_TOL * max(1.0, steps):
        raise GraphFormatError(f"1/epsilon must be an integer, got 1/{epsilon!r} = {steps!r}")
    return int(r)


def grid_values(epsilon: float) -> np.ndarray:
    """The grid ``{0, eps, 2 eps, ..., 1}`` as floats (computed as m/steps)."""
    steps = grid_steps(epsilon)
    return np.arange(steps + 1) / steps


def is_on_grid(p: float, epsilon: float) -> bool:
    if not (-GRID_TOL <= p <= 1.0 + GRID_TOL):
        return False
    steps = grid_steps(epsilon)
    return abs(p * steps - round(p * steps)) <= GRID_TOL * steps


def snap_to_grid(p: float, epsilon: float) -> float:
    """Nearest grid value to ``p``; exact midpoints round up."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability out of range: {p!r}")
    steps = grid_steps(epsilon)
    # tolerance keeps float midpoints such as 0.35/0.1 = 3.4999... rounding up
    m = math.floor(p * steps + 0.5 + GRID_TOL)
    return min(m, steps) / steps


def _canonical(p: float, steps: int) -> float:
    return round(p * steps) / steps


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Immutable directed graph. ``probs[e]`` is the probability of edge ``edges[e]``."""

    n: int
    epsilon: float
    edges: tuple[tuple[int, int], ...]
    probs: np.ndarray
    labels: tuple[str, ...] | None = None
    out_adj: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False)
    in_adj: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False)
    edge_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        out_adj = [[] for _ in range(self.n)]
        in_adj = [[] for _ in range(self.n)]
        index = {}
        for e, (u, v) in enumerate(self.edges):
            out_adj[u].append((v, e))
            in_adj[v].append((u, e))
            index[(u, v)] = e
        probs = np.asarray(self.probs, dtype=float).copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "out_adj", tuple(tuple(a) for a in out_adj))
        object.__setattr__(self, "in_adj", tuple(tuple(a) for a in in_adj))
        object.__setattr__(self, "edge_index", index)

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[tuple[int, int, float]],
        epsilon: float = 0.1,
        labels: Sequence[str] | None = None,
    ) -> "SocialGraph":
        """Validate ``(src, dst, p)`` triples and return a graph in canonical edge order."""
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise GraphFormatError(f"n must be a non-negative integer, got {n!r}")
        steps = grid_steps(epsilon)
        seen = {}
        for pos, item in enumerate(edges):
            try:
                u, v, p = item
            except (TypeError, ValueError):
                raise GraphFormatError(f"edge #{pos}: expected (src, dst, p), got {item!r}") from None
            for name, x in (("src", u), ("dst", v)):
                if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
                    raise GraphFormatError(f"edge #{pos}: {name} must be an integer, got {x!r}")
                if not 0 <= x < n:
                    raise GraphFormatError(f"edge #{pos}: {name}={x} out of range [0, {n})")
            if not isinstance(p, (int, float, np.floating, np.integer)) or isinstance(p, bool):
                raise GraphFormatError(f"edge #{pos}: probability must be a number, got {p!r}")
            if u == v:
                raise GraphFormatError(f"edge #{pos}: self-loop on node {u}")
            if (u, v) in seen:
                raise GraphFormatError(f"edge #{pos}: duplicate edge ({u}, {v}), first seen at #{seen[(u, v)][0]}")
            if not is_on_grid(float(p), epsilon):
                raise GraphFormatError(f"edge #{pos}: probability {p!r} is not on the {epsilon} grid")
            seen[(int(u), int(v))] = (pos, _canonical(float(p), steps))
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != n:
                raise GraphFormatError(f"expected {n} labels, got {len(labels)}")
            if len(set(labels)) != n:
                raise GraphFormatError("labels must be unique")
        order = sorted(seen)
        probs = np.array([seen[e][1] for e in order], dtype=float)
        return cls(n=n, epsilon=float(epsilon), edges=tuple(order), probs=probs, labels=labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_degree(self, i: int) -> int:
        return len(self.out_adj[i])

    def in_degree(self, i: int) -> int:
        return len(self.in_adj[i])

    def degree(self, i: int) -> int:
        return len(self.out_adj[i]) + len(self.in_adj[i])

    def incident_edges(self, i: int) -> list[int]:
        """Edge indices touching ``i`` (out-edges and in-edges), ascending."""
        return sorted([e for _, e in self.out_adj[i]] + [e for _, e in self.in_adj[i]])

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    def node(self, label: str) -> int:
        if self.labels and label in self.labels:
            return self.labels.index(label)
        try:
            i = int(label)
        except ValueError:
            raise KeyError(f"unknown node {label!r}") from None
        if not 0 <= i < self.n:
            raise KeyError(f"node {i} out of range")
        return i

    def prob_vector(self, probs=None) -> np.ndarray:
        """Coerce ``None`` / array / ``{(src, dst): p}`` mapping to a per-edge array."""
        if probs is None:
            return self.probs
        if isinstance(probs, Mapping):
            out = np.empty(self.m)
            missing = set(self.edge_index) - set(probs)
            if missing:
                raise ValueError(f"missing probabilities for edges {sorted(missing)}")
            for key, p in probs.items():
                if key not in self.edge_index:
                    raise ValueError(f"unknown edge {key}")
                out[self.edge_index[key]] = p
            return out
        arr = np.asarray(probs, dtype=float)
        if arr.shape != (self.m,):
            raise ValueError(f"expected {self.m} edge probabilities, got shape {arr.shape}")
        return arr

    def with_probs(self, probs) -> "SocialGraph":
        return SocialGraph.build(
            self.n,
            [(u, v, float(p)) for (u, v), p in zip(self.edges, self.prob_vector(probs))],
            self.epsilon,
            self.labels,
        )

    def to_dict(self) -> dict:
        d = {"n": self.n, "epsilon": self.epsilon}
        if self.labels is not None:
            d["labels"] = list(self.labels)
        d["edges"] = [{"src": u, "dst": v, "p": float(p)} for (u, v), p in zip(self.edges, self.probs)]
        return d

    def __eq__(self, other):
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.epsilon == other.epsilon
            and self.edges == other.edges
            and self.labels == other.labels
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EdgeReportProfile:
    """Both parties' reports per edge, aligned with ``graph.edges``."""

    graph: SocialGraph
    influencer: np.ndarray
    influencee: np.ndarray

    def __post_init__(self):
        for name in ("influencer", "influencee"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.shape != (self.graph.m,):
                raise ValueError(f"{name} reports: expected {self.graph.m} entries, got shape {arr.shape}")
            bad = [e for e, p in enumerate(arr) if not is_on_grid(float(p), self.graph.epsilon)]
            if bad:
                raise ValueError(f"{name} report off-grid on edge {self.graph.edges[bad[0]]}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def truthful(cls, graph: SocialGraph, probs=None) -> "EdgeReportProfile":
        p = graph.prob_vector(probs)
        return cls(graph, p, p)

    def replace(self, influencer=None, influencee=None) -> "EdgeReportProfile":
        return EdgeReportProfile(
            self.graph,
            self.influencer if influencer is None else influencer,
            self.influencee if influencee is None else influencee,
        )

    def to_dict(self) -> dict:
        return {
            "reports": [
                {"src": u, "dst": v, "influencer": float(a), "influencee": float(b)}
                for (u, v), a, b in zip(self.graph.edges, self.influencer, self.influencee)
            ]
        }


def _read_json(source: Source):
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and source.lstrip()[:1] in ("{", "[")):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, (str, bytes)):
        raw = source
    else:
        raw = source.read()
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise GraphFormatError(f"malformed JSON: {exc}") from None


def load_graph(source: Source) -> SocialGraph:
    """Parse the graph JSON format (path, JSON text, bytes or a binary/text stream)."""
    doc = _read_json(source)
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be a JSON object")
    for key in ("n", "epsilon", "edges"):
        if key not in doc:
            raise GraphFormatError(f"missing required field {key!r}")
    if not isinstance(doc["edges"], list):
        raise GraphFormatError("'edges' must be a list")
    if not isinstance(doc["epsilon"], (int, float)) or isinstance(doc["epsilon"], bool):
        raise GraphFormatError("'epsilon' must be a number")
    triples = []
    for pos, item in enumerate(doc["edges"]):
        if not isinstance(item, dict) or not {"src", "dst", "p"} <= item.keys():
            raise GraphFormatError(f"edge #{pos}: expected object with src, dst, p")
        triples.append((item["src"], item["dst"], item["p"]))
    return SocialGraph.build(doc["n"], triples, float(doc["epsilon"]), doc.get("labels"))


def dump_graph(graph: SocialGraph) -> str:
    return json.dumps(graph.to_dict(), indent=2)


def load_reports(source: Source, graph: SocialGraph) -> EdgeReportProfile:
    """Parse a reports file. Values are stored verbatim; off-grid values are rejected."""
    doc = _read_json(source)
    if not isinstance(doc, dict) or not isinstance(doc.get("reports"), list):
        raise GraphFormatError("reports document must be an object with a 'reports' list")
    infl = np.full(graph.m, np.nan)
    infe = np.full(graph.m, np.nan)
    for pos, item in enumerate(doc["reports"]):
        if not isinstance(item, dict) or not {"src", "dst", "influencer", "influencee"} <= item.keys():
            raise GraphFormatError(f"report #{pos}: expected object with src, dst, influencer, influencee")
        key = (item["src"], item["dst"])
        if key not in graph.edge_index:
            raise GraphFormatError(f"report #{pos}: unknown edge {key}")
        e = graph.edge_index[key]
        if not np.isnan(infl[e]):
            raise GraphFormatError(f"report #{pos}: duplicate report for edge {key}")
        for name, arr in (("influencer", infl), ("influencee", infe)):
            p = item[name]
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not is_on_grid(float(p), graph.epsilon):
                raise GraphFormatError(f"report #{pos}: {name} value {p!r} for edge {key} is not on the {graph.epsilon} grid")
            arr[e] = float(p)
    missing = [graph.edges[e] for e in range(graph.m) if np.isnan(infl[e])]
    if missing:
        raise GraphFormatError(f"missing report for edge {missing[0]}" + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else ""))
    return EdgeReportProfile(graph, infl, infe)


def dump_reports(profile: EdgeReportProfile) -> str:
    return json.dumps(profile.to_dict(), indent=2)
