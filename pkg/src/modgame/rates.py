"""Closed-form minimax-rate values and phase classification.

Rates are constant-free (the guarantees hold up to universal constants), so
experiment comparisons use ratio bands around them, never equality.  Phase
thresholds use exact real logarithms; the protocol planner separately floors
where the procedure itself floors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LOCALIZATION = "LOCALIZATION"
REFINEMENT = "REFINEMENT"
OPTIMAL = "OPTIMAL"


@dataclass(frozen=True)
class RatePhase:
    phase: str
    rate: float


def univariate_rate(B: int, m: int, sigma: float) -> RatePhase:
    """Piecewise minimax rate for total budget B over m machines.

    2^-2B below log2(1/sigma) + 2; sigma^2 / (B - log2(1/sigma)) up to
    log2(1/sigma) + m; min(sigma^2 / m, 1) beyond.
    """
    if m < 1 or B < m:
        raise ValueError("need B >= m >= 1 (every machine sends at least one bit)")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    log_inv = -math.log2(sigma)
    if B < log_inv + 2:
        return RatePhase(LOCALIZATION, math.ldexp(1.0, -2 * B))
    if B < log_inv + m:
        return RatePhase(REFINEMENT, sigma * sigma / (B - log_inv))
    return RatePhase(OPTIMAL, min(sigma * sigma / m, 1.0))


def multivariate_rate(budgets, d: int, sigma: float) -> RatePhase:
    """Piecewise minimax rate in d dimensions.

    Uses B/d bits per coordinate and the effective sample size
    m' = (1/d) sum_i min(b_i, d); the optimal phase starts at
    B/d >= log2(1/sigma) + max(m', 2).
    """
    budgets = [int(b) for b in budgets]
    if d < 1 or not budgets or any(b < 1 for b in budgets):
        raise ValueError("need d >= 1 and budgets with every b_i >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    B = sum(budgets)
    m_eff = sum(min(b, d) for b in budgets) / d
    x = B / d
    log_inv = -math.log2(sigma)
    if x < log_inv + 2:
        return RatePhase(LOCALIZATION, d * 2.0 ** (-2.0 * x))
    if x < log_inv + max(m_eff, 2.0):
        return RatePhase(REFINEMENT, d * sigma * sigma / (x - log_inv))
    return RatePhase(OPTIMAL, d * min(sigma * sigma / m_eff, 1.0))
