"""Change-point detectors for binary streams.

``RBOCPD`` is the restarted Bayesian online change-point detector: a bank of
Laplace-predictor forecasters, one per candidate change start ``s``, whose
log-weights are updated recursively. A restart is signalled when any
challenger ``s > r`` outweighs the origin forecaster ``r``. ``GLRDetector``
is a Bernoulli generalized likelihood ratio test used by the GLR baseline.

Times are 1-based and local to the stream fed to the detector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import betaln

LOG2 = math.log(2.0)


class _Table:
    """Growable lookup table ``f(0..n)`` shared by all detectors."""

    def __init__(self, func):
        self._func = func
        self.values = func(np.arange(1024))

    def upto(self, n: int) -> np.ndarray:
        if n >= self.values.size:
            size = self.values.size
            while size <= n:
                size *= 2
            self.values = self._func(np.arange(size))
        return self.values


def _log_table(i):
    with np.errstate(divide="ignore"):
        return np.log(i.astype(float))


def _xlogx_table(i):
    x = i.astype(float)
    out = np.zeros_like(x)
    out[1:] = x[1:] * np.log(x[1:])
    return out


_LOG = _Table(_log_table)
_XLOGX = _Table(_xlogx_table)


def laplace_predict(n1: int, n0: int, z: int) -> float:
    """Laplace (add-one) predictive probability of bit ``z`` after ``n1`` ones
    and ``n0`` zeros."""
    if n1 < 0 or n0 < 0:
        raise ValueError("counts must be nonnegative")
    return ((n1 if z else n0) + 1.0) / (n1 + n0 + 2.0)


def eta_default(r: int, s: int, t: int, delta: float) -> float:
    """Default prior weight of a challenger forecaster: ``delta / (n (n + 1))``
    with ``n = t - r + 1``. Decreasing in ``t``, linear in ``delta``,
    independent of ``s``; summing over ``t`` gives less than ``delta``."""
    if not (r <= s <= t):
        raise ValueError(f"need r <= s <= t, got r={r}, s={s}, t={t}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    n = t - r + 1
    return delta / (n * (n + 1.0))


class EtaSchedule:
    """Prior weights ``eta(r, s, t)`` for challenger forecasters.

    Subclasses override :meth:`log_eta`; ``s`` may be an integer array and the
    result must broadcast against it.
    """

    def log_eta(self, r: int, s, t: int, delta: float):
        n = t - r + 1
        if np.ndim(n):
            return math.log(delta) - np.log(n) - np.log(n + 1.0)
        return math.log(delta) - math.log(n) - math.log(n + 1.0)

    def __call__(self, r: int, s: int, t: int, delta: float) -> float:
        return float(np.exp(self.log_eta(r, s, t, delta)))


DEFAULT_ETA = EtaSchedule()


@dataclass(frozen=True)
class DetectionReport:
    restart: bool
    t: int
    trigger_s: Optional[int] = None


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


class RBOCPD:
    """Forecaster bank of the restarted Bayesian online change-point detector.

    Candidate ``s`` carries the log-weight

        log eta(r, s, t) + log V(r:s) - sum_{u=s..t} l(s, u)

    where ``l(s, u)`` is the Laplace log-loss of forecaster ``s`` on ``z_u``
    (``log 2`` on its first bit) and ``V(r:s)`` is the predictive likelihood
    of ``z_r..z_{s-1}`` under the origin forecaster. The origin starts at
    weight one and carries no prior penalty, so the restart test compares a
    split-stream Bayes factor with ``1 / eta``.

    The bank only reports; callers reset it (or build a new one) on restart.
    """

    def __init__(self, delta: float = 0.05, eta: Optional[EtaSchedule] = None,
                 cap: Optional[int] = None):
        _check_delta(delta)
        if cap is not None and cap < 2:
            raise ValueError("cap must be at least 2")
        self.delta = float(delta)
        self.eta = eta if eta is not None else DEFAULT_ETA
        self.cap = cap
        self._plain_eta = type(self.eta) is EtaSchedule
        self.reset()

    def reset(self) -> None:
        self.r = 1
        self.t = 0
        self.ones = 0
        self._m = 0
        self._starts = np.empty(64, dtype=np.int64)
        self._ones_before = np.empty(64, dtype=np.int64)
        self._logw = np.empty(64, dtype=float)

    def __len__(self) -> int:
        return self._m

    @property
    def starts(self) -> np.ndarray:
        return self._starts[: self._m].copy()

    @property
    def log_weights(self) -> np.ndarray:
        return self._logw[: self._m].copy()

    def counts(self):
        """Ones and zeros seen by each candidate over ``z_s..z_t``."""
        m = self._m
        n1 = self.ones - self._ones_before[:m]
        n = self.t - self._starts[:m] + 1
        return n1, n - n1

    def _grow(self) -> None:
        size = 2 * self._starts.size
        for name in ("_starts", "_ones_before", "_logw"):
            old = getattr(self, name)
            new = np.empty(size, dtype=old.dtype)
            new[: self._m] = old[: self._m]
            setattr(self, name, new)

    def step(self, z: int) -> DetectionReport:
        z = 1 if z else 0
        t = self.t = self.t + 1
        m = self._m
        if m == self._starts.size:
            self._grow()
        starts = self._starts[:m]
        logw = self._logw[:m]
        if m == 0:
            log_v = 0.0
        else:
            # forecaster s has seen z_s..z_{t-1}
            n = t - starts
            k = self.ones - self._ones_before[:m]
            if not z:
                k = n - k
            lut = _LOG.upto(t + 1)
            loss = lut[n + 2] - lut[k + 1]
            log_v = logw[0]
            logw[0] -= loss[0]
            if m > 1:
                s = starts[1:]
                if self._plain_eta:
                    # delta / (n (n + 1)) does not depend on s
                    n_t = t - self.r + 1
                    ratio = lut[n_t - 1] - lut[n_t + 1]
                else:
                    ratio = (self.eta.log_eta(self.r, s, t, self.delta)
                             - self.eta.log_eta(self.r, s, t - 1, self.delta))
                logw[1:] += ratio - loss[1:]
        if m == 0:
            new_w = -LOG2
        else:
            new_w = self.eta.log_eta(self.r, t, t, self.delta) + log_v - LOG2
        self._starts[m] = t
        self._ones_before[m] = self.ones
        self._logw[m] = new_w
        self._m = m = m + 1
        self.ones += z

        if self.cap is not None and m > self.cap:
            drop = 1 + int(np.argmin(self._logw[1:m]))
            for arr in (self._starts, self._ones_before, self._logw):
                arr[drop:m - 1] = arr[drop + 1:m]
            self._m = m = m - 1

        if m > 1:
            logw = self._logw[:m]
            j = int(np.argmax(logw[1:])) + 1
            if logw[j] > logw[0]:
                return DetectionReport(True, t, int(self._starts[j]))
        return DetectionReport(False, t)


def bank_init(delta: float, eta: Optional[EtaSchedule] = None,
              cap: Optional[int] = None) -> RBOCPD:
    return RBOCPD(delta, eta, cap)


def bank_step(bank: RBOCPD, z: int) -> DetectionReport:
    return bank.step(z)


def _as_bits(sequence) -> np.ndarray:
    z = np.asarray(sequence).ravel()
    if z.size == 0:
        raise ValueError("empty sequence")
    if not np.all((z == 0) | (z == 1)):
        raise ValueError("sequence must contain only 0/1 values")
    return z.astype(np.int64)


def rbocpd_batch(sequence: Sequence[int], delta: float,
                 eta: Optional[EtaSchedule] = None) -> Optional[int]:
    """First time the R-BOCPD restart test fires on ``sequence``, or None.

    Reference implementation: every weight is rebuilt from Beta-function
    marginal likelihoods at each ``t`` (the product of Laplace predictions
    over a block with ``k`` ones out of ``n`` equals ``B(k + 1, n - k + 1)``).
    """
    _check_delta(delta)
    eta = eta if eta is not None else DEFAULT_ETA
    z = _as_bits(sequence)
    c = np.concatenate(([0], np.cumsum(z)))  # c[i] = ones in z_1..z_i
    r = 1
    for t in range(2, z.size + 1):
        s = np.arange(r + 1, t + 1)
        k_before, n_before = c[s - 1] - c[r - 1], s - r
        k_after, n_after = c[t] - c[s - 1], t - s + 1
        log_w = (eta.log_eta(r, s, t, delta)
                 + betaln(k_before + 1, n_before - k_before + 1)
                 + betaln(k_after + 1, n_after - k_after + 1))
        k_all = c[t] - c[r - 1]
        origin = betaln(k_all + 1, t - r + 1 - k_all + 1)
        if np.any(log_w > origin):
            return t
    return None


def bernoulli_kl(p: float, q: float) -> float:
    """KL(Ber(p) || Ber(q)) with ``0 log 0 = 0``."""
    out = 0.0
    if p > 0:
        out += p * math.log(p / q) if q > 0 else math.inf
    if p < 1:
        out += (1 - p) * math.log((1 - p) / (1 - q)) if q < 1 else math.inf
    return out


def glr_threshold(n: int, delta: float) -> float:
    return math.log(3.0 * n ** 1.5 / delta)


def glr_statistic(sequence: Sequence[int]) -> float:
    """Bernoulli GLR change statistic over all split points of ``sequence``."""
    z = _as_bits(sequence)
    n = z.size
    mu = z.mean()
    best = 0.0
    for s in range(1, n):
        left, right = z[:s].mean(), z[s:].mean()
        best = max(best, s * bernoulli_kl(left, mu) + (n - s) * bernoulli_kl(right, mu))
    return best


def glr_detect(sequence: Sequence[int], delta: float) -> Optional[int]:
    """First ``n`` at which the GLR statistic of ``z_1..z_n`` exceeds
    ``log(3 n^{3/2} / delta)``, or None. Direct (quadratic) evaluation."""
    _check_delta(delta)
    z = _as_bits(sequence)
    for n in range(2, z.size + 1):
        if glr_statistic(z[:n]) > glr_threshold(n, delta):
            return n
    return None


class GLRDetector:
    """Incremental Bernoulli GLR test with the same interface as ``RBOCPD``.

    The log-likelihood of a block with ``k`` ones out of ``m`` is
    ``xlogx(k) + xlogx(m - k) - xlogx(m)``, so every split is scored with
    table lookups.
    """

    def __init__(self, delta: float = 0.05):
        _check_delta(delta)
        self.delta = float(delta)
        self.reset()

    def reset(self) -> None:
        self.t = 0
        self._prefix = np.zeros(64, dtype=np.int64)  # ones in z_1..z_i

    def statistic(self) -> float:
        n = self.t
        if n < 2:
            return 0.0
        c = self._prefix[: n + 1]
        xl = _XLOGX.upto(n)
        s = np.arange(1, n)
        k1 = c[1:n]
        k2 = c[n] - k1
        k = c[n]
        whole = xl[k] + xl[n - k] - xl[n]
        left = xl[k1] + xl[s - k1] - xl[s]
        right = xl[k2] + xl[n - s - k2] - xl[n - s]
        return max(0.0, float(np.max(left + right)) - whole)

    def step(self, z: int) -> DetectionReport:
        self.t += 1
        if self.t >= self._prefix.size:
            self._prefix = np.concatenate((self._prefix, np.zeros_like(self._prefix)))
        self._prefix[self.t] = self._prefix[self.t - 1] + (1 if z else 0)
        n = self.t
        if n >= 2 and self.statistic() > glr_threshold(n, self.delta):
            return DetectionReport(True, n)
        return DetectionReport(False, n)

    def __len__(self) -> int:
        return self.t


def detect_stream(bits: Sequence[int], delta: float, detector: str = "rbocpd"):
    """Run a detector over a whole stream, resetting after every restart.

    Returns the 1-based stream positions at which restarts fired.
    """
    if detector not in ("rbocpd", "glr"):
        raise ValueError(f"unknown detector {detector!r}")
    z = _as_bits(bits)
    det = RBOCPD(delta) if detector == "rbocpd" else GLRDetector(delta)
    hits = []
    for i, b in enumerate(z, start=1):
        if det.step(int(b)).restart:
            hits.append(i)
            det.reset()
    return hits
