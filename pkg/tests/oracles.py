"""Independent reference computations used by the tests."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def quantile_integral_cvar(values, alpha, weights=None):
    """CVaR_alpha of the (weighted) empirical loss law, by integrating its
    quantile function over [1 - alpha, 1] piece by piece."""
    x = np.asarray(values, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    lo = 1.0 - alpha
    acc, edge = 0.0, 0.0
    for xi, wi in zip(x, w):
        a, b = edge, edge + wi
        overlap = max(0.0, min(b, 1.0) - max(a, lo))
        acc += overlap * xi
        edge = b
    return acc / alpha


def exact_cvar(values, alpha):
    """Rational-arithmetic version for integer-valued samples."""
    xs = sorted((Fraction(v) for v in values), reverse=True)
    a = Fraction(alpha)
    mass = a * len(xs)
    total, left = Fraction(0), mass
    for v in xs:
        take = min(Fraction(1), left)
        if take <= 0:
            break
        total += take * v
        left -= take
    return total / mass


def laplace_sequence_logprob(bits):
    """log P(bits) under sequential Laplace prediction, step by step."""
    ones = zeros = 0
    out = 0.0
    for b in bits:
        out += math.log(((ones if b else zeros) + 1) / (ones + zeros + 2))
        ones += b
        zeros += 1 - b
    return out
