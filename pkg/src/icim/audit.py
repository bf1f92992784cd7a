"""Empirical truthfulness audits by enumerating unilateral misreports.

An agent's deviation space is the epsilon-grid product over the edges it
reports on: its out-edges in the influencer model, all incident edges in the
influencer-influencee model. Everyone else's reports stay fixed.

Utility of the deviating agent is evaluated with the probabilities that
actually drive the cascade (``world``): the agent's own true probabilities plus
the fixed opponents' reports (which equal the truth when opponents are
truthful). Payments that depend on valuations are taken in expectation over
that world.

What is compared (``payoff``): in the influencer model the ledger utility
``v_i + p_i``. In the paid influencer-influencee model the scoring payment
itself, ``(v_i + d_i^2 / (2 eps^2)) * score sum``, which already carries the
valuation as a weight; ``payoff="utility"`` compares ``v_i + p_i`` instead.

Two evaluation routes give identical numbers: ``direct`` runs the full
mechanism for every deviation; ``table`` (exact selection only) reuses cached
per-outcome results and is vectorized over deviations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import scoring
from .cascade import OutcomeTable, pattern_weights, pattern_weights_batch
from .fixtures import TruthProfile
from .graph import EdgeReportProfile, SocialGraph, grid_steps, grid_values
from .mechanisms import MechanismConfig, combine_reports, run_mechanism, without_out_edges
from .selection import TIE_TOL

UTIL_TOL = 1e-9
PAYOFFS = ("auto", "utility", "payment")
MAX_EXHAUSTIVE = 10**6
SAMPLED_DEVIATIONS = 10**4
_BATCH = 1 << 15


class AuditScopeError(ValueError):
    pass


@dataclass
class DeviationReport:
    agent: int
    truthful_utility: float
    best_deviation_utility: float
    best_deviation: dict
    gap: float
    deviations_checked: int
    exhaustive: bool = True
    sample_seed: int | None = None
    bound_holds: int = 0
    bound_violations: int = 0
    extrapolated: bool = False
    payoff: str = "utility"

    @property
    def passed(self) -> bool:
        return self.gap >= -UTIL_TOL

    def to_dict(self, graph: SocialGraph | None = None) -> dict:
        d = {
            "agent": self.agent,
            "truthful_utility": self.truthful_utility,
            "best_deviation_utility": self.best_deviation_utility,
            "best_deviation": [{"src": u, "dst": v, "report": r} for (u, v), r in self.best_deviation.items()],
            "gap": self.gap,
            "deviations_checked": self.deviations_checked,
            "exhaustive": self.exhaustive,
            "sample_seed": self.sample_seed,
            "bound_holds": self.bound_holds,
            "bound_violations": self.bound_violations,
            "extrapolated": self.extrapolated,
            "payoff": self.payoff,
            "verdict": "pass" if self.passed else "fail",
        }
        if graph is not None and graph.labels:
            d["label"] = graph.label(self.agent)
        return d


def _truth(graph: SocialGraph, truth) -> np.ndarray:
    if isinstance(truth, TruthProfile):
        return np.array(truth.probs, dtype=float)
    return np.array(graph.prob_vector(truth), dtype=float)


def deviation_edges(graph: SocialGraph, agent: int, model: str) -> list[int]:
    if model == "influencer":
        return sorted(e for _, e in graph.out_adj[agent])
    return graph.incident_edges(agent)


def _deviation_indices(g: int, d: int, truthful_idx: np.ndarray, max_exhaustive: int, samples: int,
                       seed: int, allow_sampling: bool):
    """Grid-index rows to evaluate; row 0 is always the truthful report."""
    total = g**d
    if total <= max_exhaustive:
        idx = np.arange(total, dtype=np.int64)
        rows = (idx[:, None] // (g ** np.arange(d, dtype=np.int64))) % g
        exhaustive = True
    else:
        if not allow_sampling:
            raise AuditScopeError(f"{total} deviations exceed {max_exhaustive} and sampling is disabled")
        rows = np.random.default_rng(seed).integers(0, g, size=(samples, d))
        exhaustive = False
    rows = rows[~(rows == truthful_idx).all(axis=1)]
    return np.vstack([truthful_idx[None, :], rows]), exhaustive


def _first_best_rows(sig: np.ndarray) -> np.ndarray:
    return np.argmax(sig >= sig.max(axis=1, keepdims=True) - TIE_TOL, axis=1)


def _snap(x: np.ndarray, steps: int) -> np.ndarray:
    return np.minimum(np.floor(x * steps + 0.5 + 1e-9), steps) / steps


class _TableRoute:
    """Vectorized: ``route(rows of grid indices) -> (valuation, payment)`` per row."""

    def __init__(self, config: MechanismConfig, graph: SocialGraph, table: OutcomeTable, agent: int, k: int,
                 edges: list[int], grid: np.ndarray, base_reports, world: np.ndarray):
        self.config, self.graph, self.agent, self.edges, self.grid = config, graph, agent, edges, grid
        self.steps = len(grid) - 1
        cands = list(itertools.combinations(range(graph.n), k))
        S = table.sigma_matrix(cands)
        w_world = pattern_weights(world)
        credits = np.stack([table.credits(c)[:, agent] for c in cands], axis=1)
        self.v_world = w_world @ credits
        sig_world = w_world @ S
        if config.model == "influencer":
            reported = np.array(base_reports, dtype=float)
            self.M = table.conditional(S, reported, edges)
            if not config.payments:
                self.U = self.v_world
            else:
                h = 0.0
                if config.h_mode == "clarke_pivot":
                    h = float((pattern_weights(without_out_edges(graph, reported, agent)) @ S).max())
                self.U = sig_world - h
        else:
            profile: EdgeReportProfile = base_reports
            combined = combine_reports(profile, config.combine_mode)
            self.M = table.conditional(S, combined, edges)
            self.is_src = np.array([graph.edges[e][0] == agent for e in edges], dtype=bool)
            self.counter = np.array([profile.influencee[e] if s else profile.influencer[e]
                                     for e, s in zip(edges, self.is_src)])
            # expected score of each grid report against the counterpart's report, per edge
            Z = scoring.binary(grid)
            self.V = np.array([scoring.expected_score_batch(config.rule, Z, scoring.binary(np.full(len(grid), c)))
                               for c in self.counter]).reshape(len(edges), len(grid))
            eps = graph.epsilon if config.epsilon is None else config.epsilon
            deg = graph.degree(agent)
            self.offset = deg**2 / (2 * eps**2)
            self.has_edges = deg > 0

    def combined(self, R: np.ndarray) -> np.ndarray:
        mode = self.config.combine_mode
        if mode == "mean":
            return _snap((R + self.counter) / 2, self.steps)
        own = self.is_src if mode == "influencer" else ~self.is_src
        return np.where(own, R, self.counter)

    def __call__(self, rows: np.ndarray):
        R = self.grid[rows]
        P = R if self.config.model == "influencer" else self.combined(R)
        choice = _first_best_rows(pattern_weights_batch(P) @ self.M)
        v = self.v_world[choice]
        if self.config.model == "influencer":
            return v, self.U[choice] - v
        if not self.config.payments:
            return v, np.zeros(len(rows))
        ssum = self.V[np.arange(len(self.edges))[None, :], rows].sum(axis=1)
        pay = (v + self.offset) * ssum if self.has_edges else np.zeros(len(rows))
        return v, pay


class _DirectRoute:
    """Runs the full mechanism once per deviation."""

    def __init__(self, config: MechanismConfig, graph: SocialGraph, agent: int, k: int, edges: list[int],
                 grid: np.ndarray, base_reports, world: np.ndarray):
        self.config, self.graph, self.agent, self.k, self.edges, self.grid = config, graph, agent, k, edges, grid
        self.base, self.world = base_reports, world

    def reports_for(self, values):
        if self.config.model == "influencer":
            p = np.array(self.base, dtype=float)
            p[self.edges] = values
            return p
        infl, infe = np.array(self.base.influencer), np.array(self.base.influencee)
        for e, r in zip(self.edges, values):
            if self.graph.edges[e][0] == self.agent:
                infl[e] = r
            else:
                infe[e] = r
        return self.base.replace(infl, infe)

    def __call__(self, rows: np.ndarray):
        val, pay = np.empty(len(rows)), np.empty(len(rows))
        for r, row in enumerate(rows):
            _, ledger = run_mechanism(self.graph, self.reports_for(self.grid[row]), self.config, self.k, self.world)
            val[r] = ledger.valuation[self.agent]
            pay[r] = ledger.payment[self.agent]
        return val, pay


def audit_agent(config: MechanismConfig, graph: SocialGraph, truth, agent: int, k: int = 1,
                opponents=None, max_exhaustive: int = MAX_EXHAUSTIVE, samples: int = SAMPLED_DEVIATIONS,
                seed: int = 0, allow_sampling: bool = True, method: str = "auto",
                table: OutcomeTable | None = None, payoff: str = "auto") -> DeviationReport:
    """Best unilateral misreport of ``agent`` against fixed reports of everyone else.

    ``opponents`` (influencer model only) is a per-edge vector of the other
    agents' reports; by default they report the truth.
    """
    if payoff not in PAYOFFS:
        raise ValueError(f"payoff must be one of {PAYOFFS}, got {payoff!r}")
    if payoff == "auto":
        payoff = "payment" if config.model == "influencer_influencee" and config.payments else "utility"
    theta = _truth(graph, truth)
    edges = deviation_edges(graph, agent, config.model)
    grid = grid_values(graph.epsilon)
    steps = grid_steps(graph.epsilon)
    truthful_idx = np.rint(theta[edges] * steps).astype(np.int64)
    rows, exhaustive = _deviation_indices(len(grid), len(edges), truthful_idx, max_exhaustive, samples, seed,
                                          allow_sampling)

    if config.model == "influencer":
        base = theta.copy() if opponents is None else np.array(graph.prob_vector(opponents), dtype=float)
        world = base.copy()
        world[edges] = theta[edges]
        base[edges] = theta[edges]
    else:
        if opponents is not None:
            raise ValueError("opponent reports are only supported in the influencer model")
        base = EdgeReportProfile.truthful(graph, theta)
        world = theta

    use_table = method == "table" or (
        method == "auto" and config.selector == "exact" and config.evaluator.exact and graph.m <= 16)
    if use_table:
        if config.selector != "exact" or not config.evaluator.exact:
            raise ValueError("table route needs exact selection with the exact evaluator")
        route = _TableRoute(config, graph, table or OutcomeTable(graph), agent, k, edges, grid, base, world)
    elif method in ("auto", "direct"):
        route = _DirectRoute(config, graph, agent, k, edges, grid, base, world)
    else:
        raise ValueError(f"unknown audit method {method!r}")

    val, pay = [], []
    for lo in range(0, len(rows), _BATCH):
        v, p = route(rows[lo:lo + _BATCH])
        val.append(v)
        pay.append(p)
    val, pay = np.concatenate(val), np.concatenate(pay)
    util = pay if payoff == "payment" else val + pay

    truthful = float(util[0])
    if len(rows) > 1:
        best = 1 + int(np.argmax(util[1:]))
        best_u = float(util[best])
        best_dev = {graph.edges[e]: float(grid[i]) for e, i in zip(edges, rows[best])}
    else:
        best_u, best_dev = truthful, {}
    report = DeviationReport(agent, truthful, best_u, best_dev, truthful - best_u, len(rows), exhaustive,
                             None if exhaustive else seed, payoff=payoff)
    if config.model == "influencer_influencee":
        _bound_check(report, config, graph, agent, edges, theta, util, val)
        report.extrapolated = config.rule != "quadratic"
    return report


def _bound_check(report: DeviationReport, config, graph, agent, edges, theta, util, val):
    """Count deviations where d^2 + (v + delta) 2 eps^2 >= delta beta holds, and those
    among them where the deviation nevertheless pays more than the truth."""
    if len(util) < 2:
        return
    eps = graph.epsilon if config.epsilon is None else config.epsilon
    d = graph.degree(agent)
    z = scoring.binary(theta[edges])
    beta = float(scoring.expected_score_batch(config.rule, z, z).sum()) if edges else 0.0
    v0 = val[0]
    delta = val[1:] - v0
    holds = d**2 + (v0 + delta) * 2 * eps**2 >= delta * beta
    report.bound_holds = int(holds.sum())
    report.bound_violations = int((holds & (util[1:] > util[0] + UTIL_TOL)).sum())


@dataclass
class AuditResult:
    reports: list[DeviationReport]
    passed: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self, graph: SocialGraph | None = None) -> dict:
        d = {"verdict": "pass" if self.passed else "fail",
             "min_gap": min((r.gap for r in self.reports), default=0.0),
             "agents": [r.to_dict(graph) for r in self.reports]}
        d.update(self.meta)
        return d


def nash_check(config: MechanismConfig, graph: SocialGraph, truth, k: int = 1, agents=None,
               **kwargs) -> AuditResult:
    """Audit every agent with all others truthful; passes iff no gap is below -UTIL_TOL."""
    if graph.m <= 16 and "table" not in kwargs and config.selector == "exact" and config.evaluator.exact:
        kwargs["table"] = OutcomeTable(graph)
    agents = range(graph.n) if agents is None else agents
    reports = [audit_agent(config, graph, truth, i, k, **kwargs) for i in agents]
    return AuditResult(reports, all(r.passed for r in reports))


def sample_opponent_profile(graph: SocialGraph, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(grid_values(graph.epsilon), size=graph.m)


def dominant_strategy_check(graph: SocialGraph, truth, h_mode: str = "zero", k: int = 1, profiles: int = 100,
                            seed: int = 0, agents=None, selector: str = "exact", payments: bool = True,
                            config: MechanismConfig | None = None, method: str = "auto") -> AuditResult:
    """Influencer model: truthful must be a best response against every sampled opponent profile.

    Each sampled profile assigns a random grid report to every edge; the audited
    agent's own out-edges are then replaced by its deviations.
    """
    config = config or MechanismConfig(model="influencer", h_mode=h_mode, selector=selector, payments=payments)
    config = replace(config, model="influencer", h_mode=h_mode, selector=selector, payments=payments)
    rng = np.random.default_rng(seed)
    table = OutcomeTable(graph) if (graph.m <= 16 and selector == "exact" and config.evaluator.exact) else None
    agents = list(range(graph.n)) if agents is None else list(agents)
    failures, reports = [], []
    for p in range(profiles):
        q = sample_opponent_profile(graph, rng)
        for i in agents:
            r = audit_agent(config, graph, truth, i, k, opponents=q, method=method, table=table)
            reports.append(r)
            if not r.passed:
                failures.append({"profile": p, "agent": i, "gap": r.gap, "opponents": q.tolist(),
                                 "best_deviation": {f"{u}->{v}": x for (u, v), x in r.best_deviation.items()}})
    return AuditResult(reports, not failures,
                       {"profiles": profiles, "seed": seed, "h_mode": h_mode, "selector": selector,
                        "checked": len(reports), "failures": failures})
