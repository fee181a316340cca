"""Numeric evaluation of the regret and detection-delay bounds.

All logarithms are natural. These are diagnostics: they reproduce closed-form
expressions so that orders of magnitude and monotonicity can be checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .cpd import DEFAULT_ETA, EtaSchedule


def _width_constant(horizon: float) -> float:
    return 32.0 * math.sqrt(math.e * math.log(horizon)) + 512.0


@dataclass(frozen=True)
class BoundInputs:
    horizon: int
    n_arms: int
    n_changes: int
    lipschitz: float
    sigma: float
    min_gap: float
    min_change: float
    beta: float
    delta: float

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.n_arms < 2 or self.n_changes < 0:
            raise ValueError("need T >= 1, A >= 2, K_T >= 0")
        if self.lipschitz <= 0 or self.sigma <= 0:
            raise ValueError("L and sigma must be positive")
        if self.min_gap <= 0 or self.min_change <= 0:
            raise ValueError("gaps must be positive")
        if not (0.0 <= self.beta <= 1.0) or not (0.0 < self.delta < 1.0):
            raise ValueError("beta must lie in [0, 1] and delta in (0, 1)")


def risk_lcb_regret_bound(horizon: int, lipschitz: float, sigma: float,
                          gaps: Sequence[float], n_arms: int) -> float:
    """Stationary rho-regret bound of Risk-LCB summed over suboptimal arms."""
    if any(g <= 0 for g in gaps):
        raise ValueError("suboptimality gaps must be positive")
    lead = 4.0 * lipschitz ** 2 * sigma ** 2 * _width_constant(horizon) ** 2
    return sum(lead / g + 28.0 * n_arms * g for g in gaps)


def f_term(s: int, t: int) -> float:
    if not (1 <= s <= t):
        raise ValueError(f"need 1 <= s <= t, got s={s}, t={t}")
    return math.log(s) + math.log(t + 2 - s) - 0.5 * math.log(t) + 9.0 / 8.0


def confidence_C(s: int, t: int, delta: float) -> float:
    """Confidence radius for a change at ``s`` observed up to ``t``.

    Needs ``2 <= s <= t`` (at least one pre-change sample).
    """
    if not (2 <= s <= t):
        raise ValueError(f"need 2 <= s <= t, got s={s}, t={t}")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    before = s - 1
    after = t - s + 1
    total = t
    first = (1 + 1 / before) / before * math.log(2 * math.sqrt(s) / delta)
    second = (1 + 1 / after) / after * math.log(
        2 * total * math.sqrt(after + 1) * math.log(total) ** 2 / (math.log(2) * delta))
    return math.sqrt(2) / 2 * (math.sqrt(first) + math.sqrt(second))


@dataclass(frozen=True)
class DelayBound:
    delay: int
    bounded: bool


def _delay_satisfied(d: np.ndarray, change: float, s: int, delta: float,
                     eta: EtaSchedule) -> np.ndarray:
    # vectorized confidence_C / f_term over t = d + s - 1
    t = (d + s - 1).astype(float)
    after = t - s + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        first = (1 + 1 / (s - 1)) / (s - 1) * math.log(2 * math.sqrt(s) / delta)
        second = (1 + 1 / after) / after * np.log(
            2 * t * np.sqrt(after + 1) * np.log(t) ** 2 / (math.log(2) * delta))
        c = math.sqrt(2) / 2 * (math.sqrt(first) + np.sqrt(second))
        f = math.log(s) + np.log(t + 2 - s) - 0.5 * np.log(t) + 9.0 / 8.0
        log_eta = eta.log_eta(1, s, t, delta)
        denom = 1.0 + (log_eta - f) / (2.0 * (s - 1) * (change - c) ** 2)
        rhs = (1.0 - c / change) ** -2 / (2.0 * change ** 2) * (f - log_eta) / denom
        ok = (t >= 2) & (c < change) & (denom > 0) & (d > rhs)
    return ok


def delay_bound(change: float, s: int, delta: float,
                eta: Optional[EtaSchedule] = None, cap: int = 10 ** 6) -> DelayBound:
    """Smallest delay ``d`` meeting the detection-delay inequality.

    ``change`` is the mean jump, ``s`` the local index of the first
    post-change sample (so ``s - 1`` samples precede it). Scans
    ``d = 1, 2, ..., cap``; if none qualifies the result is
    ``DelayBound(cap, bounded=False)``.
    """
    if not (0.0 < change <= 1.0):
        raise ValueError("change magnitude must lie in (0, 1]")
    if s < 2:
        raise ValueError("need at least one pre-change sample (s >= 2)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    eta = eta if eta is not None else DEFAULT_ETA
    chunk = 4096
    for lo in range(1, cap + 1, chunk):
        d = np.arange(lo, min(lo + chunk, cap + 1))
        hit = np.flatnonzero(_delay_satisfied(d, change, s, delta, eta))
        if hit.size:
            return DelayBound(int(d[hit[0]]), True)
    return DelayBound(cap, False)


def nonstationary_pull_bound(inputs: BoundInputs, delay_sum: float) -> float:
    """Bound on the expected pulls of a suboptimal arm, with false alarms
    counted through their expectation ``delta``."""
    i = inputs
    bracket = (4.0 * i.lipschitz ** 2 * i.sigma ** 2 * _width_constant(i.horizon) ** 2
               / i.min_gap ** 2 + 28.0 * i.n_arms)
    return i.beta * i.horizon / i.n_arms + delay_sum + (i.n_changes + i.delta) * bracket


def corollary_rate(inputs: BoundInputs) -> float:
    i = inputs
    return (i.n_changes * i.lipschitz ** 2 * i.sigma ** 2 * math.e * math.log(i.horizon)
            / i.min_gap ** 2 + math.sqrt(i.n_arms * i.n_changes * i.horizon))


def bound_table(inputs: BoundInputs, segment_length: Optional[int] = None):
    """Rows ``(name, value, note)`` for a quick report."""
    i = inputs
    s = segment_length or max(2, i.horizon // (i.n_changes + 1))
    delay = delay_bound(min(1.0, i.min_change), s, i.delta)
    delay_sum = i.n_changes * delay.delay
    rows: list[Tuple[str, float, str]] = [
        ("risk_lcb_regret_bound", risk_lcb_regret_bound(i.horizon, i.lipschitz, i.sigma,
                                                        [i.min_gap] * (i.n_arms - 1), i.n_arms),
         "stationary, every suboptimal arm at the minimum gap"),
        ("delay_bound", float(delay.delay),
         f"change {i.min_change:g} after {s - 1} samples" + ("" if delay.bounded else " (cap hit)")),
        ("nonstationary_pull_bound", nonstationary_pull_bound(i, delay_sum),
         f"beta={i.beta:.6g}, delay_sum={delay_sum}"),
        ("corollary_rate", corollary_rate(i), "order expression"),
    ]
    return rows
