"""Target-set selection: exhaustive optimum, greedy, degree heuristics, uniform random.

All ties go to the lexicographically smallest node sequence. Influence values
within ``TIE_TOL`` of the best are treated as ties so that different exact
evaluation routes (enumeration vs. cached tables) pick the same set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import cascade
from .cascade import SigmaEstimate
from .graph import SocialGraph

TIE_TOL = 1e-9
EXACT_MAX_NODES = 20
ALGORITHMS = ("exact", "greedy", "high_degree", "degree_discount", "random")


@dataclass(frozen=True)
class Evaluator:
    """How influence is estimated: exact enumeration or seeded Monte Carlo."""

    kind: str = "exact"
    samples: int = 10_000
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.kind not in ("exact", "mc"):
            raise ValueError(f"evaluator kind must be 'exact' or 'mc', got {self.kind!r}")

    @classmethod
    def mc(cls, samples: int = 10_000, seed: int = 0, threads: int = 1) -> "Evaluator":
        return cls("mc", samples, seed, threads)

    @property
    def exact(self) -> bool:
        return self.kind == "exact"

    def sigma(self, graph, probs, seeds) -> SigmaEstimate:
        if self.exact:
            return cascade.sigma_exact(graph, probs, seeds)
        return cascade.sigma_mc(graph, probs, seeds, self.samples, self.seed, self.threads)

    def valuations(self, graph, probs, seeds) -> cascade.ValuationVector:
        if self.exact:
            return cascade.valuations_exact(graph, probs, seeds)
        return cascade.valuations_mc(graph, probs, seeds, self.samples, self.seed, self.threads)


EXACT = Evaluator()


@dataclass(frozen=True)
class SelectionResult:
    target: tuple[int, ...]
    sigma: SigmaEstimate | None
    algorithm: str
    evaluations: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self, graph: SocialGraph | None = None) -> dict:
        d = {
            "algorithm": self.algorithm,
            "target": list(self.target),
            "sigma": None if self.sigma is None else self.sigma.mean,
            "std_error": None if self.sigma is None else self.sigma.std_error,
            "exact": None if self.sigma is None else self.sigma.exact,
            "evaluations": self.evaluations,
        }
        if graph is not None and graph.labels:
            d["target_labels"] = [graph.label(v) for v in self.target]
        d.update(self.meta)
        return d


def first_best(values) -> int:
    """Index of the first value within TIE_TOL of the maximum."""
    values = np.asarray(values, dtype=float)
    return int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])


def _check_k(graph: SocialGraph, k: int):
    if not 0 <= k <= graph.n:
        raise ValueError(f"k={k} must lie in [0, {graph.n}]")


def _finish(graph, probs, target, algorithm, evaluator, evaluations, meta=None):
    target = tuple(sorted(int(v) for v in target))
    sigma = None
    # heuristics called without probabilities or an evaluator report no influence
    if target and (probs is not None or evaluator is not None):
        sigma = (evaluator or EXACT).sigma(graph, probs, target)
        evaluations += 1
    return SelectionResult(target, sigma, algorithm, evaluations, meta or {})


def select_exact(graph: SocialGraph, probs, k: int, evaluator: Evaluator = EXACT) -> SelectionResult:
    """argmax of influence over all size-k subsets."""
    _check_k(graph, k)
    if evaluator.exact and graph.n > EXACT_MAX_NODES:
        raise cascade.EnumerationLimitError(f"exact selection limited to n <= {EXACT_MAX_NODES}")
    if k == 0:
        return SelectionResult((), SigmaEstimate(0.0, 0.0, 1, evaluator.exact), "exact", 0)
    candidates = list(itertools.combinations(range(graph.n), k))
    estimates = [evaluator.sigma(graph, probs, c) for c in candidates]
    best = first_best([s.mean for s in estimates])
    return SelectionResult(candidates[best], estimates[best], "exact", len(candidates))


def select_greedy(graph: SocialGraph, probs, k: int, evaluator: Evaluator = EXACT) -> SelectionResult:
    """k rounds of adding the node with the largest influence gain."""
    _check_k(graph, k)
    chosen: list[int] = []
    current = 0.0
    evaluations = 0
    for _ in range(k):
        rest = [v for v in range(graph.n) if v not in chosen]
        gains = []
        for v in rest:
            gains.append(evaluator.sigma(graph, probs, chosen + [v]).mean - current)
            evaluations += 1
        best = first_best(gains)
        chosen.append(rest[best])
        current += gains[best]
    return _finish(graph, probs, chosen, "greedy", evaluator, evaluations, {"order": chosen})


def effective_out_degree(graph: SocialGraph, probs=None) -> np.ndarray:
    """Out-degree, counting only edges with positive probability when ``probs`` is given."""
    if probs is None:
        return np.array([graph.out_degree(i) for i in range(graph.n)])
    p = graph.prob_vector(probs)
    return np.array([sum(p[e] > 0 for _, e in graph.out_adj[i]) for i in range(graph.n)])


def select_high_degree(graph: SocialGraph, k: int, probs=None, evaluator: Evaluator | None = None) -> SelectionResult:
    """The k nodes of largest out-degree. With ``probs``, zero-probability edges are absent."""
    _check_k(graph, k)
    deg = effective_out_degree(graph, probs)
    order = sorted(range(graph.n), key=lambda v: (-deg[v], v))
    return _finish(graph, probs, order[:k], "high_degree", evaluator, 0)


def select_degree_discount(graph: SocialGraph, probs, k: int, use_mean: bool = False,
                           evaluator: Evaluator | None = None) -> SelectionResult:
    """Degree-discount heuristic for uniform edge probability p.

    Selecting u discounts each out-neighbour v: dd_v = d_v - 2 t_v - (d_v - t_v) t_v p,
    where t_v counts selected in-neighbours of v.
    """
    _check_k(graph, k)
    p_vec = graph.prob_vector(probs)
    if graph.m and np.ptp(p_vec) > 1e-12 and not use_mean:
        raise ValueError("degree discount needs a uniform edge probability (pass use_mean=True to average)")
    p = float(p_vec.mean()) if graph.m else 0.0
    d = np.array([graph.out_degree(v) for v in range(graph.n)], dtype=float)
    dd = d.copy()
    t = np.zeros(graph.n)
    chosen: list[int] = []
    for _ in range(k):
        rest = [v for v in range(graph.n) if v not in chosen]
        u = rest[first_best(dd[rest])]
        chosen.append(u)
        for v, _ in graph.out_adj[u]:
            if v not in chosen:
                t[v] += 1
                dd[v] = d[v] - 2 * t[v] - (d[v] - t[v]) * t[v] * p
    return _finish(graph, probs, chosen, "degree_discount", evaluator, 0, {"order": chosen, "p": p})


def select_random(graph: SocialGraph, k: int, seed: int = 0, probs=None,
                  evaluator: Evaluator | None = None) -> SelectionResult:
    """Uniform k-subset; depends on the seed only, never on the probabilities."""
    _check_k(graph, k)
    members = np.random.default_rng(seed).choice(graph.n, size=k, replace=False)
    return _finish(graph, probs, members.tolist(), "random", evaluator, 0, {"seed": seed})


def select(graph: SocialGraph, probs, k: int, algorithm: str = "exact", evaluator: Evaluator = EXACT,
           seed: int = 0, use_mean: bool = False) -> SelectionResult:
    if algorithm == "exact":
        return select_exact(graph, probs, k, evaluator)
    if algorithm == "greedy":
        return select_greedy(graph, probs, k, evaluator)
    if algorithm == "high_degree":
        return select_high_degree(graph, k, probs, evaluator)
    if algorithm == "degree_discount":
        return select_degree_discount(graph, probs, k, use_mean, evaluator)
    if algorithm == "random":
        return select_random(graph, k, seed, probs, evaluator)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
