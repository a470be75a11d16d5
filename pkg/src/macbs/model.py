"""Rent-or-buy model of the split-or-merge decision for two agents.

An adversary fixes ``m``, the number of conflicts after which splitting alone
would resolve the instance. Each split costs ``t11`` (replanning both agents
independently); a merge costs ``t2`` (planning the combined agent). The
offline optimum pays ``min(m * t11, t2)``.

For N agents a restarting scheme admits a 1 + ceil(N/2) competitive ratio;
that construction is not modelled here.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .policies import p_merge_randomized

RESTART = "restart"
NO_RESTART = "no-restart"


@dataclass(frozen=True)
class ModelParams:
    t11: float
    t2: float
    B: int
    m: int

    def __post_init__(self):
        if self.t11 <= 0:
            raise ValueError("t11 must be positive")
        if self.t2 < self.t11:
            raise ValueError("t2 must be at least t11")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")


def cost_opt(params: ModelParams) -> float:
    return min(params.m * params.t11, params.t2)


def cost_macbs_r(params: ModelParams) -> float:
    """Split until the B-th conflict, then merge once and restart."""
    if params.m < params.B:
        return params.m * params.t11
    return (params.B - 1) * params.t11 + params.t2


def cost_macbs(params: ModelParams) -> float:
    """Worst case without restart: B - 1 splits leave B open nodes, each merged."""
    if params.m < params.B:
        return params.m * params.t11
    return params.B * params.t2 + (params.B - 1) * params.t11


_COST = {RESTART: cost_macbs_r, NO_RESTART: cost_macbs}


def worst_case_ratio(policy: str, t11: float, t2: float, B: int, m_max: int) -> float:
    """Largest cost(alg) / cost(opt) over adversaries m = 1..m_max."""
    if policy not in _COST:
        raise ValueError(f"policy is {RESTART!r} or {NO_RESTART!r}")
    if m_max < 2 * B:
        raise ValueError("m_max must be at least 2B to expose the worst case")
    cost = _COST[policy]
    worst = 0.0
    for m in range(1, m_max + 1):
        p = ModelParams(t11, t2, B, m)
        worst = max(worst, cost(p) / cost_opt(p))
    return worst


def best_threshold(policy: str, t11: float, t2: float, B_max: int) -> tuple[int, float]:
    """Integer B in 1..B_max minimizing the worst-case ratio (smallest B on ties)."""
    best_B, best = 1, math.inf
    for B in range(1, B_max + 1):
        r = worst_case_ratio(policy, t11, t2, B, 2 * B_max)
        if r < best - 1e-12:
            best_B, best = B, r
    return best_B, best


def first_merge_distribution(B: int) -> list[float]:
    """P(first merge happens at conflict k) for k = 1..B under the hazard rule."""
    probs, survive = [], 1.0
    for k in range(1, B + 1):
        p = p_merge_randomized(k, B)
        probs.append(survive * p)
        survive *= 1.0 - p
    return probs


def expected_cost_randomized(t11: float, t2: float, B: int, m: int) -> float:
    total = 0.0
    for k, pk in enumerate(first_merge_distribution(B), 1):
        total += pk * ((k - 1) * t11 + t2 if k <= m else m * t11)
    return total


def randomized_ratio(t11: float, t2: float, B: int, m_max: Optional[int] = None) -> float:
    """Worst expected ratio of the randomized rule, computed exactly."""
    m_max = m_max or 2 * B
    return max(
        expected_cost_randomized(t11, t2, B, m) / min(m * t11, t2)
        for m in range(1, m_max + 1)
    )


def simulate_randomized(t11: float, t2: float, B: int, m: int, trials: int, seed: int = 0) -> float:
    """Monte-Carlo mean cost of the randomized rule against adversary ``m``."""
    rng = random.Random(seed)
    total = 0.0
    for _ in range(trials):
        cost = 0.0
        for k in range(1, m + 1):
            if rng.random() < p_merge_randomized(k, B):
                cost += t2
                break
            cost += t11
        total += cost
    return total / trials


def simulated_randomized_ratio(t11: float, t2: float, B: int, trials: int = 20_000, seed: int = 0, m_max: Optional[int] = None) -> float:
    m_max = m_max or 2 * B
    return max(
        simulate_randomized(t11, t2, B, m, trials, seed + m) / min(m * t11, t2)
        for m in range(1, m_max + 1)
    )


def ratio_table(t11: float, t2: float, B_values) -> list[dict]:
    rows = []
    for B in B_values:
        m_max = max(2 * B, 2 * math.ceil(t2 / t11))
        row = {
            "B": B,
            "restart": worst_case_ratio(RESTART, t11, t2, B, m_max),
            "no_restart": worst_case_ratio(NO_RESTART, t11, t2, B, m_max),
        }
        row["randomized"] = randomized_ratio(t11, t2, B, m_max)
        rows.append(row)
    return rows
