"""Independent cascade simulation, live-edge outcomes, influence and valuations.

Attribution rule for valuations: in a fixed outcome, an activated non-seed node
``v`` is credited to exactly one in-neighbour, namely the largest-index node
among the live in-neighbours sitting one hop closer to the seed set (hop
distance measured over live edges only). Summed over nodes, credited counts
plus ``|A|`` equal the number of active nodes in every outcome.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import SocialGraph

MAX_FREE_EDGES = 25
MAX_TABLE_EDGES = 16
_CHUNK = 1 << 15
_PROB_TOL = 1e-12


class EnumerationLimitError(ValueError):
    pass


@dataclass(frozen=True)
class CascadeOutcome:
    live: np.ndarray  # bool per edge, canonical edge order


@dataclass(frozen=True)
class ActivationTrace:
    activated_at: dict[int, int]
    activator: dict[int, int | None]

    @property
    def active(self) -> frozenset[int]:
        return frozenset(self.activated_at)


@dataclass(frozen=True)
class SigmaEstimate:
    mean: float
    std_error: float
    samples: int
    exact: bool


@dataclass(frozen=True)
class ValuationVector:
    values: np.ndarray
    target: tuple[int, ...]
    std_error: np.ndarray | None = None
    samples: int = 0
    exact: bool = True

    def __getitem__(self, i):
        return self.values[i]

    def total(self) -> float:
        return float(self.values.sum())


def _seed_tuple(graph: SocialGraph, seeds: Iterable[int]) -> tuple[int, ...]:
    s = tuple(sorted({int(v) for v in seeds}))
    for v in s:
        if not 0 <= v < graph.n:
            raise ValueError(f"seed node {v} out of range [0, {graph.n})")
    return s


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_outcome(graph: SocialGraph, probs, rng) -> CascadeOutcome:
    """Flip every edge coin up front: one uniform per edge, in canonical edge order."""
    p = graph.prob_vector(probs)
    return CascadeOutcome(_rng(rng).random(graph.m) < p)


def run_cascade(graph: SocialGraph, probs, seeds: Iterable[int], rng) -> ActivationTrace:
    """Step-by-step independent cascade.

    Coins come from the same per-edge stream as :func:`sample_outcome` (one
    uniform per edge in canonical order, consulted only when the edge's source
    fires), so for a shared generator state the final active set equals the
    live-edge reachable set. When several nodes succeed on the same target in
    one step, the largest index is recorded as activator.
    """
    seeds = _seed_tuple(graph, seeds)
    if not seeds:
        raise ValueError("seed set must be non-empty")
    p = graph.prob_vector(probs)
    coins = _rng(rng).random(graph.m)
    activated_at = {v: 0 for v in seeds}
    activator: dict[int, int | None] = {v: None for v in seeds}
    frontier = list(seeds)
    step = 0
    while frontier:
        step += 1
        newly: dict[int, int] = {}
        for u in sorted(frontier):
            for v, e in graph.out_adj[u]:
                if v in activated_at:
                    continue
                if coins[e] < p[e]:
                    newly[v] = u  # ascending u: the last writer is the largest index
        for v, u in newly.items():
            activated_at[v] = step
            activator[v] = u
        frontier = list(newly)
    return ActivationTrace(activated_at, activator)


def _propagate(graph: SocialGraph, live: np.ndarray, seeds: Sequence[int]):
    """Level-synchronous BFS over a batch of outcomes.

    ``live`` has shape (N, m). Returns ``active`` (N, n) bool and ``activator``
    (N, n) int (-1 for seeds and inactive nodes).
    """
    N = live.shape[0]
    active = np.zeros((N, graph.n), dtype=bool)
    activator = np.full((N, graph.n), -1, dtype=np.int32)
    if not seeds:
        return active, activator
    active[:, list(seeds)] = True
    frontier = active.copy()
    for _ in range(graph.n):
        fired = frontier.any(axis=0)
        new = np.zeros_like(active)
        # edges are sorted by source, so for a shared target the largest source writes last
        for e, (u, v) in enumerate(graph.edges):
            if not fired[u]:
                continue
            hit = frontier[:, u] & live[:, e] & ~active[:, v]
            if hit.any():
                activator[hit, v] = u
                new[:, v] |= hit
        if not new.any():
            break
        active |= new
        frontier = new
    return active, activator


def _credit_counts(activator: np.ndarray, n: int) -> np.ndarray:
    """(N, n) number of nodes credited to each node in each outcome."""
    N = activator.shape[0]
    counts = np.zeros((N, n), dtype=np.int32)
    rows = np.arange(N)
    for v in range(n):
        a = activator[:, v]
        hit = a >= 0
        counts[rows[hit], a[hit]] += 1
    return counts


def reachable_set(graph: SocialGraph, outcome: CascadeOutcome, seeds: Iterable[int]) -> frozenset[int]:
    seeds = _seed_tuple(graph, seeds)
    active, _ = _propagate(graph, np.asarray(outcome.live, dtype=bool)[None, :], seeds)
    return frozenset(np.flatnonzero(active[0]).tolist())


def reachable_count(graph: SocialGraph, outcome: CascadeOutcome, seeds: Iterable[int]) -> int:
    """sigma_X(A): nodes reachable from the seeds over live edges, seeds included."""
    if len(outcome.live) != graph.m:
        raise ValueError(f"outcome has {len(outcome.live)} coins, graph has {graph.m} edges")
    return len(reachable_set(graph, outcome, seeds))


def outcome_credits(graph: SocialGraph, outcome: CascadeOutcome, seeds: Iterable[int]) -> np.ndarray:
    """Per-node credited activation counts for one fixed outcome."""
    seeds = _seed_tuple(graph, seeds)
    _, act = _propagate(graph, np.asarray(outcome.live, dtype=bool)[None, :], seeds)
    return _credit_counts(act, graph.n)[0]


# ---------------------------------------------------------------- exact


def _enumeration_plan(graph: SocialGraph, p: np.ndarray, seeds: tuple[int, ...]):
    """Split edges into fixed-live, fixed-blocked and free (enumerated) ones.

    Edges with p in {0, 1} are deterministic. Uncertain edges whose source can
    never become active do not influence any outcome and are fixed blocked.
    """
    certain = p >= 1.0 - _PROB_TOL
    possible = p > _PROB_TOL
    reach = np.zeros(graph.n, dtype=bool)
    reach[list(seeds)] = True
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for v, e in graph.out_adj[u]:
            if possible[e] and not reach[v]:
                reach[v] = True
                stack.append(v)
    src = np.array([u for u, _ in graph.edges], dtype=int)
    free = np.flatnonzero(possible & ~certain & (reach[src] if graph.m else np.zeros(0, bool)))
    base = certain.copy()
    return base, free


def _exact_batches(graph: SocialGraph, probs, seeds):
    p = graph.prob_vector(probs)
    seeds = _seed_tuple(graph, seeds)
    base, free = _enumeration_plan(graph, p, seeds)
    F = len(free)
    if F > MAX_FREE_EDGES:
        raise EnumerationLimitError(
            f"{F} uncertain edges exceed the exact-enumeration limit of {MAX_FREE_EDGES}"
        )
    pf = p[free]
    total = 1 << F
    shifts = np.arange(F)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(bool)
        live = np.repeat(base[None, :], len(idx), axis=0)
        live[:, free] = bits
        w = np.where(bits, pf, 1.0 - pf).prod(axis=1)
        active, activator = _propagate(graph, live, seeds)
        yield w, active, activator, total


def sigma_exact(graph: SocialGraph, probs, seeds: Iterable[int]) -> SigmaEstimate:
    """Expected number of active nodes by enumerating every outcome of the uncertain edges."""
    seeds = _seed_tuple(graph, seeds)
    mean = 0.0
    total = 1
    for w, active, _, total in _exact_batches(graph, probs, seeds):
        mean += float(w @ active.sum(axis=1))
    return SigmaEstimate(mean, 0.0, total, True)


def valuations_exact(graph: SocialGraph, probs, seeds: Iterable[int]) -> ValuationVector:
    """Expected credited activations per node (exact enumeration)."""
    seeds = _seed_tuple(graph, seeds)
    vals = np.zeros(graph.n)
    total = 1
    for w, _, activator, total in _exact_batches(graph, probs, seeds):
        for v in range(graph.n):
            a = activator[:, v]
            hit = a >= 0
            if hit.any():
                vals += np.bincount(a[hit], weights=w[hit], minlength=graph.n)
    return ValuationVector(vals, seeds, None, total, True)


# ---------------------------------------------------------- Monte Carlo


def sample_uniforms(m: int, base_seed: int, start: int, stop: int) -> np.ndarray:
    """Coin uniforms for samples ``start..stop-1``; sample ``s`` is seeded by (base_seed, s) alone."""
    out = np.empty((stop - start, m))
    for row, s in enumerate(range(start, stop)):
        out[row] = np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(s,))).random(m)
    return out


def _mc_chunks(samples: int, threads: int) -> list[tuple[int, int]]:
    size = max(1, min(4096, -(-samples // max(1, threads))))
    return [(s, min(samples, s + size)) for s in range(0, samples, size)]


def _mc_run(graph: SocialGraph, p: np.ndarray, seeds, samples: int, base_seed: int, threads: int):
    if samples < 1:
        raise ValueError("samples must be >= 1")

    def work(bounds):
        lo, hi = bounds
        live = sample_uniforms(graph.m, base_seed, lo, hi) < p
        active, activator = _propagate(graph, live, seeds)
        return active.sum(axis=1), _credit_counts(activator, graph.n)

    chunks = _mc_chunks(samples, threads)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))  # map preserves sample order
    else:
        parts = [work(c) for c in chunks]
    sizes = np.concatenate([a for a, _ in parts])
    credits = np.concatenate([c for _, c in parts])
    return sizes, credits


def _se(x: np.ndarray, axis=0):
    n = x.shape[axis]
    if n < 2:
        return np.zeros(x.shape[1:]) if x.ndim > 1 else 0.0
    return x.std(axis=axis, ddof=1) / np.sqrt(n)


def sigma_mc(graph: SocialGraph, probs, seeds: Iterable[int], samples: int = 10_000,
             base_seed: int = 0, threads: int = 1) -> SigmaEstimate:
    """Monte Carlo influence; identical results for any ``threads``."""
    seeds = _seed_tuple(graph, seeds)
    sizes, _ = _mc_run(graph, graph.prob_vector(probs), seeds, samples, base_seed, threads)
    return SigmaEstimate(float(sizes.mean()), float(_se(sizes.astype(float))), samples, False)


def valuations_mc(graph: SocialGraph, probs, seeds: Iterable[int], samples: int = 10_000,
                  base_seed: int = 0, threads: int = 1) -> ValuationVector:
    seeds = _seed_tuple(graph, seeds)
    _, credits = _mc_run(graph, graph.prob_vector(probs), seeds, samples, base_seed, threads)
    credits = credits.astype(float)
    return ValuationVector(credits.mean(axis=0), seeds, np.asarray(_se(credits)), samples, False)


# ------------------------------------------------------- outcome table


def pattern_weights(p: np.ndarray) -> np.ndarray:
    """Probability of every live/blocked pattern; bit e of the pattern index is edge e."""
    w = np.ones(1)
    for pe in p:
        w = np.kron(np.array([1.0 - pe, pe]), w)
    return w


def pattern_weights_batch(P: np.ndarray) -> np.ndarray:
    """Row-wise :func:`pattern_weights` for a (B, d) array of probabilities."""
    B, d = P.shape
    W = np.ones((B, 1))
    for e in range(d):
        f = np.stack([1.0 - P[:, e], P[:, e]], axis=1)
        W = (f[:, :, None] * W[:, None, :]).reshape(B, -1)
    return W


class OutcomeTable:
    """All 2^m live-edge patterns of a small graph, with cached per-seed-set results.

    Outcome-level quantities (active count, credited counts) do not depend on
    the probabilities, so exact influence under many probability vectors costs
    one weight vector and a dot product each.
    """

    def __init__(self, graph: SocialGraph):
        if graph.m > MAX_TABLE_EDGES:
            raise EnumerationLimitError(f"{graph.m} edges exceed the outcome-table limit of {MAX_TABLE_EDGES}")
        self.graph = graph
        idx = np.arange(1 << graph.m, dtype=np.int64)
        self.live = ((idx[:, None] >> np.arange(graph.m)) & 1).astype(bool)
        self._cache: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}

    def _entry(self, seeds) -> tuple[np.ndarray, np.ndarray]:
        key = _seed_tuple(self.graph, seeds)
        if key not in self._cache:
            active, activator = _propagate(self.graph, self.live, key)
            self._cache[key] = (active.sum(axis=1).astype(float), _credit_counts(activator, self.graph.n).astype(float))
        return self._cache[key]

    def sizes(self, seeds) -> np.ndarray:
        return self._entry(seeds)[0]

    def credits(self, seeds) -> np.ndarray:
        return self._entry(seeds)[1]

    def sigma(self, seeds, probs) -> float:
        return float(pattern_weights(self.graph.prob_vector(probs)) @ self.sizes(seeds))

    def valuations(self, seeds, probs) -> np.ndarray:
        return pattern_weights(self.graph.prob_vector(probs)) @ self.credits(seeds)

    def sigma_matrix(self, candidates) -> np.ndarray:
        return np.stack([self.sizes(c) for c in candidates], axis=1)

    def conditional(self, values: np.ndarray, probs, edges: Sequence[int]) -> np.ndarray:
        """Expectation of per-pattern ``values`` (N, ...) given each 0/1 state of ``edges``.

        Row ``s`` of the result conditions edge ``edges[j]`` on bit j of ``s``; the
        remaining edges keep their probabilities. Combine with
        :func:`pattern_weights_batch` over the same edges to get the exact
        expectation for any probabilities on ``edges``.
        """
        p = np.array(self.graph.prob_vector(probs), dtype=float)
        d = len(edges)
        rows = []
        for s in range(1 << d):
            q = p.copy()
            for j, e in enumerate(edges):
                q[e] = float((s >> j) & 1)
            rows.append(pattern_weights(q) @ values)
        return np.array(rows)
