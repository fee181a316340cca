"""Risk functionals on the loss scale.

Every risk here is oriented so that *lower is better*: samples are losses
(``loss = 1 - reward``), CVaR averages the largest losses and the
mean-variance criterion adds a variance penalty to the mean loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

CVAR = "cvar"
MEAN_VARIANCE = "mv"


@dataclass(frozen=True)
class RiskMeasure:
    """Which risk functional to use and at which level.

    ``level`` is the CVaR tail fraction alpha in (0, 1] for ``kind="cvar"``
    and the variance weight gamma >= 0 for ``kind="mv"``.
    """

    kind: str
    level: float

    def __post_init__(self) -> None:
        if self.kind == CVAR:
            if not (0.0 < self.level <= 1.0):
                raise ValueError(f"CVaR level must lie in (0, 1], got {self.level}")
        elif self.kind == MEAN_VARIANCE:
            if not (self.level >= 0.0 and math.isfinite(self.level)):
                raise ValueError(f"mean-variance weight must be >= 0, got {self.level}")
        else:
            raise ValueError(f"unknown risk measure kind {self.kind!r}")

    @classmethod
    def cvar(cls, alpha: float) -> "RiskMeasure":
        return cls(CVAR, float(alpha))

    @classmethod
    def mean_variance(cls, gamma: float) -> "RiskMeasure":
        return cls(MEAN_VARIANCE, float(gamma))

    @property
    def lipschitz(self) -> float:
        return lipschitz_constant(self)

    def empirical(self, values, weights=None) -> float:
        if self.kind == CVAR:
            if weights is None:
                return empirical_cvar(values, self.level)
            return weighted_empirical_cvar(values, weights, self.level)
        return empirical_mv(values, self.level, weights)

    def bernoulli(self, p_loss: float) -> float:
        if self.kind == CVAR:
            return bernoulli_cvar(p_loss, self.level)
        return bernoulli_mv(p_loss, self.level)

    def __str__(self) -> str:
        name = "CVaR" if self.kind == CVAR else "MV"
        return f"{name}({self.level:g})"


def _as_sample(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    return x


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _normalized_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != n:
        raise ValueError(f"got {w.size} weights for {n} values")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not all be zero")
    return w / total


def empirical_cvar(values: Sequence[float], alpha: float) -> float:
    """Upper-tail CVaR of the empirical distribution of ``values``.

    Averages the ``alpha * n`` largest values; when ``alpha * n`` is not an
    integer the next order statistic enters with its fractional share, which
    is the exact integral of the empirical quantile function over
    ``[1 - alpha, 1]`` divided by ``alpha``. For integer ``alpha * n`` this is
    the plain mean of the top ``alpha * n`` values.
    """
    _check_alpha(alpha)
    x = np.sort(_as_sample(values))[::-1]
    n = x.size
    mass = alpha * n
    k = min(int(math.floor(mass)), n)
    total = float(x[:k].sum())
    if k < n:
        total += (mass - k) * float(x[k])
    return total / mass


def weighted_empirical_cvar(values: Sequence[float], weights: Sequence[float],
                            alpha: float) -> float:
    """Upper-tail CVaR of a weighted empirical distribution.

    Values are visited from largest to smallest, collecting normalized weight
    until mass ``alpha`` is reached; the boundary value is split fractionally.
    """
    _check_alpha(alpha)
    x = _as_sample(values)
    w = _normalized_weights(weights, x.size)
    order = np.argsort(-x, kind="stable")
    x, w = x[order], w[order]
    before = np.concatenate(([0.0], np.cumsum(w)[:-1]))
    take = np.clip(alpha - before, 0.0, w)
    return float(np.dot(take, x) / alpha)


def empirical_mv(values: Sequence[float], gamma: float,
                 weights: Optional[Sequence[float]] = None) -> float:
    """Mean loss plus ``gamma`` times the (population) variance."""
    if not (gamma >= 0.0):
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    x = _as_sample(values)
    if weights is None:
        mean = float(x.mean())
        var = float(np.mean((x - mean) ** 2))
    else:
        w = _normalized_weights(weights, x.size)
        mean = float(np.dot(w, x))
        var = float(np.dot(w, (x - mean) ** 2))
    return mean + gamma * var


def _check_p(p_loss: float) -> None:
    if not (0.0 <= p_loss <= 1.0):
        raise ValueError(f"loss probability must lie in [0, 1], got {p_loss}")


def bernoulli_cvar(p_loss: float, alpha: float) -> float:
    """CVaR_alpha of a Bernoulli(p_loss) loss: ``min(1, p_loss / alpha)``."""
    _check_p(p_loss)
    _check_alpha(alpha)
    return min(1.0, p_loss / alpha)


def bernoulli_mv(p_loss: float, gamma: float) -> float:
    _check_p(p_loss)
    if not (gamma >= 0.0):
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return p_loss + gamma * p_loss * (1.0 - p_loss)


def lipschitz_constant(measure: RiskMeasure) -> float:
    """Lipschitz constant w.r.t. the W1 distance on [0, 1]-supported laws.

    CVaR_alpha gives ``1 / alpha``. For mean-variance ``1 + 4 * gamma`` is a
    conservative constant: the mean moves by at most W1 and each of the two
    second-moment terms by at most 2 * W1.
    """
    if measure.kind == CVAR:
        return 1.0 / measure.level
    return 1.0 + 4.0 * measure.level


def binary_risk(ones: float, n: float, measure: RiskMeasure) -> float:
    """Risk of a 0/1 loss sample summarised by its count of ones.

    Same value as ``measure.empirical`` on the expanded sample, in O(1).
    Counts may be fractional (discounted sums).
    """
    if n <= 0:
        raise ValueError("empty sample")
    frac = ones / n
    if measure.kind == CVAR:
        return min(1.0, frac / measure.level)
    return frac + measure.level * frac * (1.0 - frac)
