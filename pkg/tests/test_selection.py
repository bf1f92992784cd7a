import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icim.cascade import EnumerationLimitError, sigma_exact
from icim.fixtures import random_graph, stylized_lie
from icim.graph import SocialGraph
from icim.selection import (
    Evaluator,
    select,
    select_degree_discount,
    select_exact,
    select_greedy,
    select_high_degree,
    select_random,
)

from conftest import path_graph, small_graphs


def brute_best(graph, probs, k):
    """Oracle: scan subsets in lexicographic order, keep the first strict improvement."""
    best, best_s = None, -1.0
    for c in itertools.combinations(range(graph.n), k):
        s = sigma_exact(graph, probs, c).mean
        if s > best_s + 1e-9:
            best, best_s = c, s
    return best, best_s


def test_exact_stylized(stylized):
    g, _ = stylized
    r = select_exact(g, None, 1)
    assert r.target == (g.node("j"),) and r.sigma.mean == 8
    lie = select_exact(g, stylized_lie(g), 1)
    assert lie.target == (g.node("i"),) and lie.sigma.mean == 7


def test_exact_k_equals_n():
    g = SocialGraph.build(4, [(0, 1, 0.3), (2, 3, 0.6)])
    r = select_exact(g, None, 4)
    assert r.target == (0, 1, 2, 3) and r.sigma.mean == 4


@given(small_graphs(n_max=5, max_edges=7), st.integers(1, 3))
@settings(max_examples=40)
def test_exact_matches_oracle(g, k):
    k = min(k, g.n)
    r = select_exact(g, None, k)
    target, s = brute_best(g, None, k)
    assert r.target == target
    assert r.sigma.mean == pytest.approx(s, abs=1e-12)


def test_exact_guard():
    g = SocialGraph.build(21, [])
    with pytest.raises(EnumerationLimitError):
        select_exact(g, None, 1)


def test_ties_go_to_smallest():
    g = SocialGraph.build(4, [])
    assert select_exact(g, None, 2).target == (0, 1)
    assert select_greedy(g, None, 2).target == (0, 1)


@given(small_graphs(n_max=6, max_edges=9))
@settings(max_examples=40)
def test_greedy_equals_exact_at_k1(g):
    assert select_greedy(g, None, 1).target == select_exact(g, None, 1).target


def test_greedy_path():
    assert select_greedy(path_graph(3), None, 1).target == (0,)


@given(small_graphs(n_min=2, n_max=6, max_edges=9))
@settings(max_examples=40)
def test_greedy_approximation(g):
    opt = select_exact(g, None, 2).sigma.mean
    assert select_greedy(g, None, 2).sigma.mean >= (1 - 1 / math.e) * opt - 1e-12


@given(small_graphs(n_min=2, n_max=6, max_edges=9), st.integers(1, 2))
@settings(max_examples=40)
def test_exact_dominates_every_algorithm(g, k):
    p = g.probs
    best = select_exact(g, p, k).sigma.mean
    others = [select_greedy(g, p, k), select_high_degree(g, k, p), select_random(g, k, 3, p)]
    if g.m == 0 or np.ptp(p) == 0:
        others.append(select_degree_discount(g, p, k))
    for r in others:
        assert len(set(r.target)) == k and all(0 <= v < g.n for v in r.target)
        assert sigma_exact(g, p, r.target).mean <= best + 1e-12


def test_high_degree_star():
    g = SocialGraph.build(6, [(0, v, 0.5) for v in range(1, 6)])
    assert select_high_degree(g, 1).target == (0,)


def test_high_degree_ties():
    g = SocialGraph.build(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    assert select_high_degree(g, 2).target == (0, 1)


def test_high_degree_stylized(stylized):
    g, _ = stylized
    deg = [g.out_degree(v) for v in range(g.n)]
    assert select_high_degree(g, 1).target == (int(np.argmax(deg)),)


def test_high_degree_ignores_zero_probability_edges():
    g = SocialGraph.build(5, [(0, 1, 1.0), (0, 2, 1.0), (3, 4, 1.0)])
    assert select_high_degree(g, 1, [0.0, 0.0, 1.0]).target == (3,)


def star_with_satellite():
    # star 0 -> 1..5; satellite hub 1 -> 6,7,8 sits next to the star; node 9 -> 10,11,12 is far away
    edges = [(0, v, 0.5) for v in range(1, 6)] + [(1, v, 0.5) for v in (6, 7, 8)] + [(9, v, 0.5) for v in (10, 11, 12)]
    return SocialGraph.build(13, edges)


def test_degree_discount_first_pick_is_high_degree():
    g = star_with_satellite()
    assert select_degree_discount(g, None, 1).target == select_high_degree(g, 1).target


def test_degree_discount_skips_discounted_neighbour():
    g = star_with_satellite()
    # node 1 drops to 3 - 2 - (3 - 1) * 0.5 = 0 after the center is chosen
    assert select_degree_discount(g, None, 2).meta["order"] == [0, 9]
    assert select_high_degree(g, 2).target == (0, 1)


def test_degree_discount_k_equals_n():
    g = star_with_satellite()
    assert select_degree_discount(g, None, g.n).target == tuple(range(g.n))


def test_degree_discount_non_uniform():
    g = SocialGraph.build(3, [(0, 1, 0.3), (1, 2, 0.5)])
    with pytest.raises(ValueError, match="uniform"):
        select_degree_discount(g, None, 1)
    assert select_degree_discount(g, None, 1, use_mean=True).meta["p"] == pytest.approx(0.4)


def test_random_reproducible_and_report_independent():
    g = random_graph(np.random.default_rng(2), 6, 6)
    a = select_random(g, 3, seed=7, probs=g.probs)
    b = select_random(g, 3, seed=7, probs=np.zeros(g.m))
    assert a.target == b.target
    assert select_random(g, g.n, seed=1).target == tuple(range(g.n))


def test_random_inclusion_frequency():
    g = SocialGraph.build(5, [])
    draws = 100_000
    members = np.array([select_random(g, 2, seed=s).target for s in range(draws)])
    freq = np.bincount(members.ravel(), minlength=5) / draws
    assert np.all(np.abs(freq - 0.4) <= 3 * np.sqrt(0.4 * 0.6 / draws))


def test_mc_evaluator_selection_deterministic():
    g = random_graph(np.random.default_rng(4), 5, 5, interior=True)
    ev = Evaluator.mc(2000, seed=3)
    assert select_greedy(g, None, 2, ev).target == select_greedy(g, None, 2, ev).target


def test_dispatch_rejects_unknown():
    with pytest.raises(ValueError):
        select(path_graph(3), None, 1, "celf")


def test_k_out_of_range():
    with pytest.raises(ValueError):
        select_exact(path_graph(3), None, 4)
