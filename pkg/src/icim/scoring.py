"""Scoring rules over finite outcome sets, expected scores and grid properness checks.

Outcomes are numbered 1..t in the formulas; arrays are 0-based. For an edge with
influence probability theta the binary distribution is ``(theta, 1 - theta)``:
outcome 1 is "active", outcome 2 is "inactive".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import grid_steps

DIST_TOL = 1e-9
GRID_GUARD_T = 3
GRID_GUARD_EPS = 0.05

# lower bounds on the grid loss, as multiples of eps^2, for adjacent-grid misreports
STATED_MIN_LOSS_FACTORS = {"quadratic": 2.0, "spherical": 1.5, "weighted": 1.0}


class Rule(str, Enum):
    QUADRATIC = "quadratic"
    LOGARITHMIC = "logarithmic"
    SPHERICAL = "spherical"
    WEIGHTED = "weighted"
    REVERSE_WEIGHTED = "reverse_weighted"
    # negative control: S_i(z) = z_i is not proper
    LINEAR = "linear"


PROPER_RULES = (Rule.QUADRATIC, Rule.LOGARITHMIC, Rule.SPHERICAL, Rule.WEIGHTED, Rule.REVERSE_WEIGHTED)


class ScoringDomainError(ValueError):
    pass


def _rule(rule) -> Rule:
    try:
        return Rule(rule)
    except ValueError:
        raise ValueError(f"unknown scoring rule {rule!r}; choose from {[r.value for r in Rule]}") from None


def check_distribution(z, name: str = "z") -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise ValueError(f"{name} must be a 1-d distribution over at least 2 outcomes")
    if (z < -DIST_TOL).any():
        raise ValueError(f"{name} has negative components: {z}")
    if abs(z.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"{name} does not sum to 1 (sum={z.sum()!r})")
    return np.clip(z, 0.0, None)


def binary(theta) -> np.ndarray:
    """Influence probability -> (active, inactive) distribution. Vectorizes over arrays."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([theta, 1.0 - theta], axis=-1)


def score_matrix(rule, Z: np.ndarray, scaled: bool = False) -> np.ndarray:
    """S_i(z) for every outcome i; ``Z`` is (..., t). Logarithmic gives -inf at zeros."""
    rule = _rule(rule)
    Z = np.asarray(Z, dtype=float)
    t = Z.shape[-1]
    idx = np.arange(1, t + 1)
    sq = (Z**2).sum(axis=-1, keepdims=True)
    if rule is Rule.QUADRATIC:
        return 2 * Z - sq
    if rule is Rule.LOGARITHMIC:
        with np.errstate(divide="ignore"):
            return np.log(Z)
    if rule is Rule.SPHERICAL:
        return Z / np.sqrt(sq)
    if rule is Rule.WEIGHTED:
        return (2 * idx * Z - (Z**2 * idx).sum(axis=-1, keepdims=True)) / t
    if rule is Rule.REVERSE_WEIGHTED:
        rw = t - idx
        S = 2 * Z * rw - (Z**2 * rw).sum(axis=-1, keepdims=True)
        return S / t if scaled else S
    return Z.copy()


def score(rule, i: int, z, scaled: bool = False) -> float:
    """S_i(z) with 1-based outcome index ``i``."""
    z = check_distribution(z)
    if not 1 <= i <= z.size:
        raise ValueError(f"outcome index {i} outside 1..{z.size}")
    if _rule(rule) is Rule.LOGARITHMIC and z[i - 1] <= 0:
        raise ScoringDomainError(f"logarithmic score undefined at z_{i} = 0")
    return float(score_matrix(rule, z, scaled)[i - 1])


def expected_score_batch(rule, Z: np.ndarray, W: np.ndarray, scaled: bool = False) -> np.ndarray:
    """V(z|w) row-wise; outcomes with w_i = 0 contribute nothing (so 0 * ln 0 = 0)."""
    S = score_matrix(rule, Z, scaled)
    W = np.asarray(W, dtype=float)
    if _rule(rule) is Rule.LOGARITHMIC and (np.isinf(S) & (W > 0)).any():
        raise ScoringDomainError("logarithmic score: report puts zero mass on an outcome with positive weight")
    return np.where(W > 0, W * np.where(np.isinf(S), 0.0, S), 0.0).sum(axis=-1)


def expected_score(rule, z, w, scaled: bool = False) -> float:
    """V(z|w) = sum_i w_i S_i(z): score of report ``z`` when outcomes follow ``w``."""
    z = check_distribution(z, "z")
    w = check_distribution(w, "w")
    if z.size != w.size:
        raise ValueError("z and w must have the same length")
    return float(expected_score_batch(rule, z, w, scaled))


def loss(rule, z, w, scaled: bool = False) -> float:
    """L(z|w) = V(w|w) - V(z|w)."""
    return expected_score(rule, w, w, scaled) - expected_score(rule, z, w, scaled)


def grid_distributions(t: int, epsilon: float) -> np.ndarray:
    """Every distribution on t outcomes whose components are multiples of epsilon."""
    steps = grid_steps(epsilon)
    rows = [c + (steps - sum(c),) for c in itertools.product(range(steps + 1), repeat=t - 1) if sum(c) <= steps]
    return np.array(rows, dtype=float) / steps


def _check_guard(t: int, epsilon: float):
    if t < 2 or t > GRID_GUARD_T or epsilon < GRID_GUARD_EPS - 1e-12:
        raise ValueError(f"grid search limited to 2 <= t <= {GRID_GUARD_T} and epsilon >= {GRID_GUARD_EPS}")


def _loss_matrix(rule, G: np.ndarray, scaled: bool) -> np.ndarray:
    """L[w, z] over all grid pairs (rows: true w, columns: report z)."""
    S = score_matrix(rule, G, scaled)  # (g, t)
    S = np.where(np.isinf(S), 0.0, S) if _rule(rule) is Rule.LOGARITHMIC else S
    V = G @ S.T  # V[w, z] = sum_i w_i S_i(z)
    return np.diag(V)[:, None] - V


@dataclass(frozen=True)
class GridLoss:
    rule: str
    t: int
    epsilon: float
    min_loss: float
    w: tuple[float, ...]
    z: tuple[float, ...]

    @property
    def stated_bound(self) -> float | None:
        f = STATED_MIN_LOSS_FACTORS.get(self.rule)
        return None if f is None else f * self.epsilon**2


def grid_min_loss(rule, t: int, epsilon: float, scaled: bool = False) -> GridLoss:
    """Smallest expected-score loss over all grid pairs z != w (exhaustive)."""
    rule = _rule(rule)
    if rule is Rule.LOGARITHMIC:
        raise ValueError("grid_min_loss excludes the logarithmic rule (unbounded at zero mass)")
    _check_guard(t, epsilon)
    G = grid_distributions(t, epsilon)
    L = _loss_matrix(rule, G, scaled)
    np.fill_diagonal(L, np.inf)
    w, z = np.unravel_index(np.argmin(L), L.shape)
    return GridLoss(rule.value, t, epsilon, float(L[w, z]), tuple(G[w].tolist()), tuple(G[z].tolist()))


@dataclass(frozen=True)
class Properness:
    proper: bool
    witness: tuple[tuple[float, ...], tuple[float, ...], float] | None  # (w, z, loss)


def is_proper_on_grid(rule, t: int, epsilon: float, scaled: bool = False, tol: float = 1e-12) -> Properness:
    """True iff every grid pair z != w has strictly positive loss.

    For the logarithmic rule only strictly positive grid distributions are used.
    The witness is the pair with the smallest loss when the check fails.
    """
    rule = _rule(rule)
    _check_guard(t, epsilon)
    G = grid_distributions(t, epsilon)
    if rule is Rule.LOGARITHMIC:
        G = G[(G > 0).all(axis=1)]
        if len(G) < 2:
            return Properness(True, None)
    L = _loss_matrix(rule, G, scaled)
    np.fill_diagonal(L, np.inf)
    w, z = np.unravel_index(np.argmin(L), L.shape)
    if L[w, z] > tol:
        return Properness(True, None)
    return Properness(False, (tuple(G[w].tolist()), tuple(G[z].tolist()), float(L[w, z])))
