"""Payment mechanisms.

Influencer model: Groves payments. Welfare of a target set is its expected
influence, which equals the sum of all credited valuations plus ``|A|``. Agent i is paid
the welfare less its own valuation, minus a pivot term ``h_i``:

    p_i = sigma(A) - v_i(A) - h_i

``h_i`` is 0 (``zero``) or the best influence achievable when i's out-edges are
set to probability 0 (``clarke_pivot``).

Influencer-influencee model: each agent is paid

    (v_i(A) + d_i^2 / (2 eps^2)) * sum of expected scores over its incident edges

where d_i is in-degree plus out-degree and each edge's expected score is
``V(own report | counterpart's report)`` under a proper scoring rule.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from . import scoring
from .graph import EdgeReportProfile, SocialGraph, snap_to_grid
from .scoring import Rule
from .selection import EXACT, Evaluator, SelectionResult, select, select_exact

MODELS = ("influencer", "influencer_influencee")
H_MODES = ("zero", "clarke_pivot")
COMBINE_MODES = ("mean", "influencee", "influencer")


@dataclass(frozen=True)
class MechanismConfig:
    model: str = "influencer"
    rule: str = "quadratic"
    h_mode: str = "zero"
    combine_mode: str = "mean"
    epsilon: float | None = None
    selector: str = "exact"
    evaluator: Evaluator = field(default_factory=Evaluator)
    payments: bool = True
    seed: int = 0
    allow_logarithmic: bool = False
    use_mean_probability: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.h_mode not in H_MODES:
            raise ValueError(f"h_mode must be one of {H_MODES}, got {self.h_mode!r}")
        if self.combine_mode not in COMBINE_MODES:
            raise ValueError(f"combine_mode must be one of {COMBINE_MODES}, got {self.combine_mode!r}")
        rule = Rule(self.rule)
        if rule is Rule.LOGARITHMIC and not self.allow_logarithmic:
            raise ValueError("logarithmic rule is unbounded on the grid; set allow_logarithmic=True to use it")
        object.__setattr__(self, "rule", rule.value)

    @property
    def tag(self) -> str:
        if self.model == "influencer":
            return f"influencer/groves-{self.h_mode}" if self.payments else "influencer/no-payments"
        return f"influencer_influencee/{self.rule}" if self.payments else "influencer_influencee/no-payments"


@dataclass
class PaymentLedger:
    mechanism: str
    target: tuple[int, ...]
    valuation: np.ndarray
    payment: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def utility(self) -> np.ndarray:
        return self.valuation + self.payment

    @property
    def n(self) -> int:
        return len(self.valuation)

    def agent(self, i: int) -> dict:
        return {"id": i, "valuation": float(self.valuation[i]), "payment": float(self.payment[i]),
                "utility": float(self.utility[i])}

    def to_dict(self, graph: SocialGraph | None = None) -> dict:
        agents = [self.agent(i) for i in range(self.n)]
        if graph is not None and graph.labels:
            for a in agents:
                a["label"] = graph.label(a["id"])
        d = {"mechanism": self.mechanism, "target": list(self.target), "agents": agents}
        d.update(self.meta)
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "valuation", "payment", "utility"])
        for i in range(self.n):
            a = self.agent(i)
            w.writerow([i, repr(a["valuation"]), repr(a["payment"]), repr(a["utility"])])
        return buf.getvalue()


def combine_reports(profile: EdgeReportProfile, mode: str = "mean") -> np.ndarray:
    """Per-edge probability used for selection: snapped mean, or one party's report."""
    if mode == "influencer":
        return profile.influencer.copy()
    if mode == "influencee":
        return profile.influencee.copy()
    if mode != "mean":
        raise ValueError(f"combine mode must be one of {COMBINE_MODES}, got {mode!r}")
    eps = profile.graph.epsilon
    return np.array([snap_to_grid((a + b) / 2, eps) for a, b in zip(profile.influencer, profile.influencee)])


def without_out_edges(graph: SocialGraph, probs, agent: int) -> np.ndarray:
    p = np.array(graph.prob_vector(probs), dtype=float)
    for _, e in graph.out_adj[agent]:
        p[e] = 0.0
    return p


def clarke_pivot(graph: SocialGraph, reported_probs, agent: int, k: int, evaluator: Evaluator = EXACT) -> float:
    """Best achievable influence once ``agent`` can no longer influence anyone."""
    return select_exact(graph, without_out_edges(graph, reported_probs, agent), k, evaluator).sigma.mean


def groves_payment(graph: SocialGraph, reported_probs, target, h_mode: str = "zero",
                   evaluator: Evaluator = EXACT, world_probs=None, payments: bool = True) -> PaymentLedger:
    """Groves / Clarke ledger for a chosen target set.

    Valuations come from ``world_probs`` when given (the probabilities that
    actually drive the cascade, used by the audit); otherwise from the reports.
    Pivot terms are always computed from the reports.
    """
    target = tuple(sorted(target))
    reported = graph.prob_vector(reported_probs)
    world = reported if world_probs is None else graph.prob_vector(world_probs)
    vals = evaluator.valuations(graph, world, target).values if target else np.zeros(graph.n)
    welfare = float(vals.sum()) + len(target)
    if not payments:
        return PaymentLedger("influencer/no-payments", target, vals, np.zeros(graph.n), {"welfare": welfare})
    if h_mode == "zero":
        h = np.zeros(graph.n)
    elif h_mode == "clarke_pivot":
        h = np.array([clarke_pivot(graph, reported, i, len(target), evaluator) for i in range(graph.n)])
    else:
        raise ValueError(f"h_mode must be one of {H_MODES}, got {h_mode!r}")
    pay = welfare - vals - h
    return PaymentLedger(f"influencer/groves-{h_mode}", target, vals, pay, {"welfare": welfare, "h": h.tolist()})


def edge_scores(profile: EdgeReportProfile, rule, scaled: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(influencer's score, influencee's score) per edge: V(own report | other's report)."""
    a = scoring.binary(profile.influencer)
    b = scoring.binary(profile.influencee)
    if profile.graph.m == 0:
        return np.zeros(0), np.zeros(0)
    return (scoring.expected_score_batch(rule, a, b, scaled),
            scoring.expected_score_batch(rule, b, a, scaled))


def score_sums(profile: EdgeReportProfile, rule, scaled: bool = False) -> np.ndarray:
    graph = profile.graph
    s_src, s_dst = edge_scores(profile, rule, scaled)
    out = np.zeros(graph.n)
    for e, (u, v) in enumerate(graph.edges):
        out[u] += s_src[e]
        out[v] += s_dst[e]
    return out


def scoring_payment(graph: SocialGraph, profile: EdgeReportProfile, target, rule="quadratic",
                    epsilon: float | None = None, evaluator: Evaluator = EXACT, valuation_probs=None,
                    combine_mode: str = "mean", payments: bool = True, scaled: bool = False) -> PaymentLedger:
    """Scoring-rule ledger. Valuations use ``valuation_probs`` or else the combined reports."""
    if profile.graph is not graph and profile.graph != graph:
        raise ValueError("report profile belongs to a different graph")
    eps = graph.epsilon if epsilon is None else epsilon
    target = tuple(sorted(target))
    probs = combine_reports(profile, combine_mode) if valuation_probs is None else graph.prob_vector(valuation_probs)
    vals = evaluator.valuations(graph, probs, target).values if target else np.zeros(graph.n)
    rule = Rule(rule).value
    if not payments:
        return PaymentLedger("influencer_influencee/no-payments", target, vals, np.zeros(graph.n))
    sums = score_sums(profile, rule, scaled)
    deg = np.array([graph.degree(i) for i in range(graph.n)], dtype=float)
    pay = np.where(deg > 0, (vals + deg**2 / (2 * eps**2)) * sums, 0.0)
    return PaymentLedger(f"influencer_influencee/{rule}", target, vals, pay,
                         {"epsilon": eps, "score_sums": sums.tolist()})


def _select(graph, probs, k, config: MechanismConfig) -> SelectionResult:
    return select(graph, probs, k, config.selector, config.evaluator, config.seed, config.use_mean_probability)


def run_mechanism(graph: SocialGraph, reports, config: MechanismConfig, k: int,
                  world_probs=None) -> tuple[SelectionResult, PaymentLedger]:
    """Reports -> target set -> ledger.

    ``reports`` is an :class:`EdgeReportProfile` or, in the influencer model, a
    per-edge probability vector (the influencers' reports).
    """
    if config.model == "influencer":
        probs = reports.influencer if isinstance(reports, EdgeReportProfile) else graph.prob_vector(reports)
        sel = _select(graph, probs, k, config)
        ledger = groves_payment(graph, probs, sel.target, config.h_mode, config.evaluator, world_probs, config.payments)
    else:
        if not isinstance(reports, EdgeReportProfile):
            raise TypeError("the influencer-influencee model needs an EdgeReportProfile")
        probs = combine_reports(reports, config.combine_mode)
        sel = _select(graph, probs, k, config)
        ledger = scoring_payment(graph, reports, sel.target, config.rule, config.epsilon, config.evaluator,
                                 world_probs, config.combine_mode, config.payments)
    ledger.mechanism = config.tag
    ledger.meta["sigma"] = None if sel.sigma is None else sel.sigma.mean
    ledger.meta["config"] = {k_: v for k_, v in asdict(config).items() if k_ != "evaluator"}
    # thread count never changes results, so it stays out of the output
    ledger.meta["config"]["evaluator"] = {k_: v for k_, v in asdict(config.evaluator).items() if k_ != "threads"}
    return sel, ledger
