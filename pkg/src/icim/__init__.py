"""Influence maximization with strategic agents who report edge probabilities."""

from .audit import (
    AuditResult,
    DeviationReport,
    audit_agent,
    dominant_strategy_check,
    nash_check,
)
from .cascade import (
    ActivationTrace,
    CascadeOutcome,
    OutcomeTable,
    SigmaEstimate,
    ValuationVector,
    reachable_set,
    run_cascade,
    sample_outcome,
    sigma_exact,
    sigma_mc,
    valuations_exact,
    valuations_mc,
)
from .fixtures import TruthProfile, build_stylized_fixture, random_graph
from .graph import EdgeReportProfile, GraphFormatError, SocialGraph, load_graph, load_reports, snap_to_grid
from .mechanisms import (
    MechanismConfig,
    PaymentLedger,
    combine_reports,
    groves_payment,
    run_mechanism,
    scoring_payment,
)
from .scoring import Rule, expected_score, grid_min_loss, is_proper_on_grid, loss, score
from .selection import Evaluator, SelectionResult, select, select_exact, select_greedy

__version__ = "0.1.0"
