import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icim.audit import (
    AuditScopeError,
    audit_agent,
    deviation_edges,
    dominant_strategy_check,
    nash_check,
)
from icim.fixtures import check_stylized_fixture, random_graph
from icim.graph import SocialGraph
from icim.mechanisms import MechanismConfig

from conftest import small_graphs

MODEL2 = MechanismConfig(model="influencer_influencee")


def high_degree_trap():
    # 0 -> 1,2,3 has the largest degree but reaches only 4 nodes; 4 reaches 6
    edges = [(0, v, 1.0) for v in (1, 2, 3)] + [(4, 5, 1.0), (4, 6, 1.0), (5, 7, 1.0), (5, 8, 1.0), (6, 9, 1.0)]
    return SocialGraph.build(10, edges)


# --- the stylized counterexample

def test_fixture_statements_hold(stylized):
    g, _ = stylized
    assert check_stylized_fixture(g) == []


def test_no_payments_rewards_lying(stylized):
    g, truth = stylized
    k = g.node("k")
    r = audit_agent(MechanismConfig(payments=False), g, truth, k)
    assert (r.truthful_utility, r.best_deviation_utility) == (1, 2)
    assert r.gap < 0 and not r.passed
    assert r.best_deviation[(k, g.node("m"))] == 0.0


def test_groves_removes_the_incentive(stylized):
    g, truth = stylized
    r = audit_agent(MechanismConfig(), g, truth, g.node("k"))
    assert r.truthful_utility == 8
    assert r.gap >= -1e-9


def test_fixture_dominant_for_k(stylized):
    g, truth = stylized
    res = dominant_strategy_check(g, truth, "zero", profiles=20, seed=1, agents=[g.node("k")])
    assert res.passed and res.meta["checked"] == 20


# --- influencer-influencee model

def test_single_edge_both_agents():
    g = SocialGraph.build(2, [(0, 1, 0.5)])
    for agent in (0, 1):
        r = audit_agent(MODEL2, g, g.probs, agent)
        assert r.deviations_checked == 11
        assert r.gap >= 0


def test_empty_graph_passes():
    g = SocialGraph.build(3, [])
    res = nash_check(MODEL2, g, g.probs)
    assert res.passed
    assert all(r.deviations_checked == 1 for r in res.reports)


def test_quadratic_nash_batch():
    rng = np.random.default_rng(21)
    for _ in range(15):
        g = random_graph(rng, 2, 6, max_degree=4)
        res = nash_check(MODEL2, g, g.probs)
        assert res.passed
        assert sum(r.bound_violations for r in res.reports) == 0


def test_improper_rule_fails_somewhere():
    rng = np.random.default_rng(7)
    cfg = MechanismConfig(model="influencer_influencee", rule="linear")
    verdicts = [nash_check(cfg, g, g.probs).passed for g in (random_graph(rng, 2, 6, max_degree=4) for _ in range(10))]
    assert not all(verdicts)


def test_non_quadratic_marked_extrapolated():
    g = SocialGraph.build(2, [(0, 1, 0.5)])
    r = audit_agent(MechanismConfig(model="influencer_influencee", rule="weighted"), g, g.probs, 0)
    assert r.extrapolated


def test_ledger_utility_payoff_can_beat_truth():
    # valuation gain of 1.7 outweighs the 1.484 payment loss when v is also added on top of the payment
    g = SocialGraph.build(5, [(0, 1, 0.6), (0, 4, 1.0), (1, 4, 0.0), (2, 1, 0.8), (2, 4, 0.7), (3, 1, 0.9),
                              (3, 4, 0.8), (4, 1, 0.5)])
    paid = audit_agent(MODEL2, g, g.probs, 3)
    assert paid.payoff == "payment" and paid.passed
    ledger = audit_agent(MODEL2, g, g.probs, 3, payoff="utility")
    assert ledger.gap == pytest.approx(-0.216, abs=1e-9)
    assert ledger.bound_violations == 1


def test_payoff_validation():
    g = SocialGraph.build(2, [(0, 1, 0.5)])
    with pytest.raises(ValueError):
        audit_agent(MODEL2, g, g.probs, 0, payoff="welfare")


# --- influencer model dominance

def test_two_node_dominant():
    g = SocialGraph.build(2, [(0, 1, 0.4)])
    for h in ("zero", "clarke_pivot"):
        assert dominant_strategy_check(g, g.probs, h, profiles=10).passed


@pytest.mark.parametrize("h", ["zero", "clarke_pivot"])
def test_random_dominant(h):
    rng = np.random.default_rng(3)
    for _ in range(4):
        g = random_graph(rng, 2, 5, max_edges=7)
        res = dominant_strategy_check(g, g.probs, h, profiles=10, seed=5)
        assert res.passed, res.meta["failures"][:1]


def test_high_degree_selection_is_manipulable():
    g = high_degree_trap()
    r = audit_agent(MechanismConfig(selector="high_degree"), g, g.probs, 0)
    # hiding all three edges makes node 4 the target, raising welfare from 4 to 6
    assert (r.truthful_utility, r.best_deviation_utility) == (4, 6)
    res = dominant_strategy_check(g, g.probs, "zero", profiles=3, selector="high_degree", agents=[0])
    assert not res.passed and res.meta["failures"]
    assert dominant_strategy_check(g, g.probs, "zero", profiles=3, agents=[0]).passed


def test_random_selection_payments_off_never_gains():
    g = high_degree_trap()
    r = audit_agent(MechanismConfig(selector="random", payments=False), g, g.probs, 0)
    assert r.gap >= 0


# --- scope and reporting

def test_deviation_edges():
    g = SocialGraph.build(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)])
    assert deviation_edges(g, 1, "influencer") == [1]
    assert deviation_edges(g, 1, "influencer_influencee") == [0, 1]


def test_sampling_fallback_seeded():
    g = SocialGraph.build(4, [(0, 1, 0.3), (0, 2, 0.5), (0, 3, 0.2)])
    a = audit_agent(MechanismConfig(), g, g.probs, 0, max_exhaustive=100, samples=50, seed=9)
    b = audit_agent(MechanismConfig(), g, g.probs, 0, max_exhaustive=100, samples=50, seed=9)
    assert not a.exhaustive and a.sample_seed == 9
    assert a.to_dict() == b.to_dict()
    with pytest.raises(AuditScopeError):
        audit_agent(MechanismConfig(), g, g.probs, 0, max_exhaustive=100, allow_sampling=False)


def test_report_consistency(stylized):
    g, truth = stylized
    res = nash_check(MechanismConfig(payments=False), g, truth)
    assert not res.passed
    for r in res.reports:
        assert r.deviations_checked > 0
        assert r.gap == pytest.approx(r.truthful_utility - r.best_deviation_utility)
        if r.best_deviation_utility >= r.truthful_utility - 1e-9:
            assert r.gap <= 1e-9
    doc = res.to_dict(g)
    assert doc["verdict"] == "fail" and doc["min_gap"] == -1
    assert {a["label"] for a in doc["agents"]} == set(g.labels)


def test_opponents_only_for_influencer_model():
    g = SocialGraph.build(2, [(0, 1, 0.5)])
    with pytest.raises(ValueError):
        audit_agent(MODEL2, g, g.probs, 0, opponents=g.probs)


# --- the vectorized route and the plain mechanism loop agree

@given(small_graphs(n_min=2, n_max=5, max_edges=6), st.sampled_from(["zero", "clarke_pivot", "off"]),
       st.integers(0, 4), st.integers(1, 2))
@settings(max_examples=25)
def test_routes_agree_influencer(g, h, agent, k):
    agent %= g.n
    k = min(k, g.n)
    cfg = MechanismConfig(h_mode="zero" if h == "off" else h, payments=h != "off")
    opp = np.random.default_rng(agent).choice(np.arange(11) / 10, size=g.m)
    t = audit_agent(cfg, g, g.probs, agent, k, opponents=opp, method="table")
    d = audit_agent(cfg, g, g.probs, agent, k, opponents=opp, method="direct")
    assert t.truthful_utility == pytest.approx(d.truthful_utility, abs=1e-9)
    assert t.best_deviation_utility == pytest.approx(d.best_deviation_utility, abs=1e-9)


@given(small_graphs(n_min=2, n_max=4, max_edges=4), st.sampled_from(["quadratic", "spherical", "reverse_weighted"]),
       st.sampled_from(["mean", "influencer", "influencee"]), st.integers(0, 3), st.sampled_from(["auto", "utility"]))
@settings(max_examples=25)
def test_routes_agree_scoring(g, rule, combine, agent, payoff):
    agent %= g.n
    cfg = MechanismConfig(model="influencer_influencee", rule=rule, combine_mode=combine)
    t = audit_agent(cfg, g, g.probs, agent, method="table", payoff=payoff)
    d = audit_agent(cfg, g, g.probs, agent, method="direct", payoff=payoff)
    assert t.truthful_utility == pytest.approx(d.truthful_utility, abs=1e-9)
    assert t.best_deviation_utility == pytest.approx(d.best_deviation_utility, abs=1e-9)
    assert (t.bound_holds, t.bound_violations) == (d.bound_holds, d.bound_violations)
