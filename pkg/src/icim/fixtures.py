"""Test instances: the stylized lying example and seeded random graphs."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cascade import sigma_exact, valuations_exact
from .graph import EdgeReportProfile, SocialGraph, grid_values, load_graph
from .selection import select_exact


@dataclass(frozen=True)
class TruthProfile:
    """Ground-truth edge probabilities; truthful agents on both ends report them."""

    graph: SocialGraph
    probs: np.ndarray

    @classmethod
    def of(cls, graph: SocialGraph, probs=None) -> "TruthProfile":
        return cls(graph, np.array(graph.prob_vector(probs), dtype=float))

    @property
    def reports(self) -> EdgeReportProfile:
        return EdgeReportProfile.truthful(self.graph, self.probs)


def stylized_network_path():
    return resources.files("icim") / "data" / "stylized_network.json"


def build_stylized_fixture(verify: bool = True) -> tuple[SocialGraph, TruthProfile]:
    """All-ones network in which agent ``k`` gains by hiding its edge to ``m``.

    Under truthful reports the single best seed is ``j`` (influence 8) and k is
    credited only ``m`` (``l`` is reached directly from j). If k reports its edge
    to ``m`` as 0, the best reported seed becomes ``i`` (reported influence 7),
    from which k is truly credited both ``l`` and ``m``.
    """
    with stylized_network_path().open("rb") as fh:
        graph = load_graph(fh)
    truth = TruthProfile.of(graph)
    if verify:
        problems = check_stylized_fixture(graph)
        if problems:
            raise AssertionError("stylized fixture violates: " + "; ".join(problems))
    return graph, truth


def stylized_lie(graph: SocialGraph) -> np.ndarray:
    """Reports with k's edge to m set to 0, everything else truthful."""
    p = np.array(graph.probs)
    p[graph.edge_index[(graph.node("k"), graph.node("m"))]] = 0.0
    return p


def check_stylized_fixture(graph: SocialGraph) -> list[str]:
    """Brute-force check of the example's five quantitative statements; returns violations."""
    i, j, k = graph.node("i"), graph.node("j"), graph.node("k")
    truth, lie = graph.probs, stylized_lie(graph)
    out = []
    if abs(sigma_exact(graph, truth, [j]).mean - 8) > 1e-12:
        out.append("sigma({j}) != 8")
    if select_exact(graph, truth, 1).target != (j,):
        out.append("truthful optimum is not {j}")
    if abs(valuations_exact(graph, truth, [j])[k] - 1) > 1e-12:
        out.append("v_k({j}) != 1")
    chosen = select_exact(graph, lie, 1)
    if chosen.target != (i,) or abs(chosen.sigma.mean - 7) > 1e-12:
        out.append("misreport does not select {i} with reported influence 7")
    if abs(valuations_exact(graph, truth, [i])[k] - 2) > 1e-12:
        out.append("true v_k({i}) != 2")
    return out


def random_graph(rng: np.random.Generator, n_min: int = 2, n_max: int = 6, edge_density: float = 0.35,
                 max_edges: int = 10, max_degree: int | None = None, epsilon: float = 0.1,
                 interior: bool = False) -> SocialGraph:
    """Random directed graph with grid probabilities.

    ``interior`` draws probabilities strictly inside (0, 1); otherwise the full
    grid including 0 and 1 is used.
    """
    n = int(rng.integers(n_min, n_max + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    rng.shuffle(pairs)
    deg = np.zeros(n, dtype=int)
    chosen = []
    for u, v in pairs:
        if len(chosen) >= max_edges:
            break
        if rng.random() >= edge_density:
            continue
        if max_degree is not None and (deg[u] >= max_degree or deg[v] >= max_degree):
            continue
        chosen.append((u, v))
        deg[u] += 1
        deg[v] += 1
    grid = grid_values(epsilon)
    if interior:
        grid = grid[1:-1]
    probs = rng.choice(grid, size=len(chosen))
    return SocialGraph.build(n, [(u, v, float(p)) for (u, v), p in zip(chosen, probs)], epsilon)
