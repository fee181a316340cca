"""Risk-averse bandit policies sharing one index-and-argmin skeleton.

* ``RiskLCB`` -- lower-confidence-bound on an empirical risk; optionally
  equipped with a per-arm change detector (R-BOCPD or GLR) and forced
  uniform exploration, which gives R-BOCPD-Risk-LCB and GLR-Risk-LCB.
* ``DiscountedRiskLCB`` and ``SlidingWindowRiskLCB`` -- passively adaptive
  baselines.
* ``OraclePolicy`` -- plays the arm of smallest true risk at every step.

Arms are 0-based; time steps start at 1. Rewards are bits and every policy
works on losses ``1 - reward``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cpd import GLRDetector, RBOCPD
from .env import SwitchingBanditInstance
from .risk import CVAR, RiskMeasure, binary_risk, weighted_empirical_cvar, empirical_mv

WIDTH_CONSTANT = 512.0


@dataclass
class PolicyConfig:
    """Tuning shared by all policies.

    ``beta_mode`` is ``"fixed"`` (use ``beta``) or ``"decaying"``
    (``min(1, sqrt(A / t))``). ``discount`` and ``window`` are only read by the
    discounted and sliding-window baselines.
    """

    measure: RiskMeasure = field(default_factory=lambda: RiskMeasure.cvar(0.45))
    lipschitz: Optional[float] = None
    sigma: float = 0.5
    bonus_scale: float = 1.0
    beta: float = 0.0
    beta_mode: str = "fixed"
    n0: float = 1.0
    s0: float = 0.5
    delta: float = 0.05
    discount: float = 1.0
    window: Optional[int] = None
    detector_cap: Optional[int] = None

    def __post_init__(self) -> None:
        if self.lipschitz is None:
            self.lipschitz = self.measure.lipschitz
        if self.bonus_scale < 0:
            raise ValueError("bonus_scale must be nonnegative")
        if self.sigma <= 0 or self.lipschitz <= 0:
            raise ValueError("sigma and the Lipschitz constant must be positive")
        if self.beta_mode not in ("fixed", "decaying"):
            raise ValueError(f"unknown beta_mode {self.beta_mode!r}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.n0 <= 0 or self.s0 <= 0:
            raise ValueError("n0 and s0 must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must lie in (0, 1]")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be at least 1")

    def width_scale(self, t: int) -> float:
        """Numerator of the exploration width at step ``t``."""
        return (self.bonus_scale * self.lipschitz * self.sigma
                * (32.0 * math.sqrt(math.e * math.log(t)) + WIDTH_CONSTANT))

    def beta_at(self, t: int, n_arms: int) -> float:
        if self.beta_mode == "decaying":
            return decaying_beta(n_arms, t)
        return self.beta


def exploration_width(n: float, t: int, cfg: PolicyConfig) -> float:
    return cfg.width_scale(t) / math.sqrt(n)


def default_beta(n_arms: int, n_changes: int, horizon: int) -> float:
    """Forced-exploration rate ``min(1, sqrt(A K_T / T))``."""
    if n_arms < 2 or horizon < 1 or n_changes < 0:
        raise ValueError("need A >= 2, T >= 1, K_T >= 0")
    return min(1.0, math.sqrt(n_arms * n_changes / horizon))


def decaying_beta(n_arms: int, t: int) -> float:
    if t < 1:
        raise ValueError("t must be at least 1")
    return min(1.0, math.sqrt(n_arms / t))


def default_gamma(n_changes: int, horizon: int) -> float:
    """Discount ``1 - sqrt(K_T / T) / 4``; 1.0 (no discount) when K_T = 0."""
    if n_changes == 0:
        return 1.0
    return 1.0 - 0.25 * math.sqrt(n_changes / horizon)


def default_tau(n_changes: int, horizon: int) -> int:
    """Window ``ceil(2 sqrt(T ln T / K_T))``; the whole horizon when K_T = 0."""
    if n_changes == 0:
        return horizon
    return int(math.ceil(2.0 * math.sqrt(horizon * math.log(horizon) / n_changes)))


@dataclass
class ArmState:
    """Per-arm bookkeeping since the last restart.

    ``N`` and ``S`` include the ``n0``/``s0`` initialization mass; ``losses``
    holds the real observations only.
    """

    n0: float = 1.0
    s0: float = 0.5
    N: float = 0.0
    S: float = 0.0
    losses: List[int] = field(default_factory=list)
    ones: int = 0
    detector: Optional[object] = None
    restart_count: int = 0

    def __post_init__(self) -> None:
        if not self.losses and self.N == 0.0:
            self.N, self.S = self.n0, self.s0

    def observe(self, loss: int) -> None:
        self.losses.append(loss)
        self.ones += loss
        self.N += 1
        self.S += loss

    def restart(self) -> None:
        self.N, self.S = self.n0, self.s0
        self.losses = []
        self.ones = 0
        if self.detector is not None:
            self.detector.reset()
        self.restart_count += 1


def arm_risk(arm: ArmState, measure: RiskMeasure) -> float:
    """Risk estimate of an arm: CVaR on real losses only, mean-variance with
    the initialization mass treated as ``n0`` pseudo-losses of ``s0 / n0``."""
    if measure.kind == CVAR:
        return binary_risk(arm.ones, len(arm.losses), measure)
    mean = arm.S / arm.N
    second = (arm.ones + arm.s0 * arm.s0 / arm.n0) / arm.N
    return mean + measure.level * max(0.0, second - mean * mean)


def risk_lcb_index(arm: ArmState, t: int, cfg: PolicyConfig) -> float:
    if not arm.losses:
        return -math.inf
    return arm_risk(arm, cfg.measure) - exploration_width(arm.N, t, cfg)


def choose(indices, beta: float, rng: np.random.Generator) -> Tuple[int, bool]:
    """Uniform arm with probability ``beta``, else argmin (lowest id on ties).

    Always consumes exactly one uniform (plus one integer when exploring).
    """
    if rng.random() < beta:
        return int(rng.integers(len(indices))), True
    return int(np.argmin(indices)), False


def select_action(indices: Sequence[float], beta: float, rng: np.random.Generator) -> int:
    if len(indices) < 2:
        raise ValueError("need at least two arms")
    if not (0.0 <= beta <= 1.0):
        raise ValueError("beta must lie in [0, 1]")
    return choose(np.asarray(indices, dtype=float), beta, rng)[0]


def _weighted_risk(losses, weights, measure: RiskMeasure) -> float:
    if measure.kind == CVAR:
        return weighted_empirical_cvar(losses, weights, measure.level)
    return empirical_mv(losses, measure.level, weights)


def discounted_index(history: Sequence[Tuple[int, float]], t: int, cfg: PolicyConfig) -> float:
    """Discounted Risk-LCB index from an arm's ``(step, loss)`` history.

    When choosing at step ``t`` the observation from step ``s < t`` gets
    weight ``discount ** (t - 1 - s)``; the width uses the discounted count
    in place of ``N``.
    """
    if not history:
        return -math.inf
    steps = np.array([s for s, _ in history], dtype=float)
    losses = np.array([x for _, x in history], dtype=float)
    w = cfg.discount ** (t - 1 - steps)
    n = float(w.sum())
    if n <= 0:
        return -math.inf
    return _weighted_risk(losses, w, cfg.measure) - exploration_width(n, t, cfg)


def sliding_window_index(history: Sequence[Tuple[int, float]], t: int, cfg: PolicyConfig) -> float:
    """Sliding-window Risk-LCB index: only observations from the last
    ``window`` steps (``t - window <= s < t``) count."""
    tau = cfg.window if cfg.window is not None else t
    recent = [x for s, x in history if s >= t - tau]
    if not recent:
        return -math.inf
    risk = cfg.measure.empirical(recent)
    return risk - exploration_width(len(recent), t, cfg)


@dataclass
class ActionTrace:
    actions: np.ndarray
    rewards: np.ndarray
    forced: np.ndarray
    restarts: List[Tuple[int, int]]
    restart_counts: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.size)

    @property
    def forced_fraction(self) -> float:
        return float(self.forced.mean()) if self.forced.size else 0.0


class BasePolicy:
    name = "base"

    def __init__(self, n_arms: int, cfg: Optional[PolicyConfig] = None):
        if n_arms < 2:
            raise ValueError("need at least two arms")
        self.n_arms = int(n_arms)
        self.cfg = cfg if cfg is not None else PolicyConfig()
        self.reset()

    def reset(self) -> None:
        self.restarts: List[Tuple[int, int]] = []

    def indices(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def beta(self, t: int) -> float:
        return self.cfg.beta_at(t, self.n_arms)

    def select(self, t: int, rng: np.random.Generator) -> Tuple[int, bool]:
        return choose(self.indices(t), self.beta(t), rng)

    def update(self, t: int, arm: int, reward: int) -> bool:
        """Record ``reward`` for ``arm`` at step ``t``; True if the arm restarted."""
        raise NotImplementedError

    def restart_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_arms, dtype=np.int64)
        for a, _ in self.restarts:
            counts[a] += 1
        return counts


class RiskLCB(BasePolicy):
    """Risk-LCB, optionally with per-arm change detection and restarts.

    ``detector`` is None (plain Risk-LCB), ``"rbocpd"`` or ``"glr"``. On a
    detection the arm's counts go back to ``(n0, s0)``, its observations are
    dropped and its detector starts afresh.
    """

    name = "risk_lcb"

    def __init__(self, n_arms: int, cfg: Optional[PolicyConfig] = None,
                 detector: Optional[str] = None):
        if detector not in (None, "rbocpd", "glr"):
            raise ValueError(f"unknown detector {detector!r}")
        self.detector = detector
        super().__init__(n_arms, cfg)

    def _new_detector(self):
        if self.detector == "rbocpd":
            return RBOCPD(self.cfg.delta, cap=self.cfg.detector_cap)
        if self.detector == "glr":
            return GLRDetector(self.cfg.delta)
        return None

    def reset(self) -> None:
        super().reset()
        cfg = self.cfg
        self.arms = [ArmState(cfg.n0, cfg.s0, detector=self._new_detector())
                     for _ in range(self.n_arms)]
        self._risk = np.zeros(self.n_arms)
        self._n = np.full(self.n_arms, float(cfg.n0))
        self._empty = np.ones(self.n_arms, dtype=bool)

    def indices(self, t: int) -> np.ndarray:
        idx = self._risk - self.cfg.width_scale(t) / np.sqrt(self._n)
        idx[self._empty] = -np.inf
        return idx

    def update(self, t: int, arm: int, reward: int) -> bool:
        state = self.arms[arm]
        state.observe(1 - int(reward))
        restarted = False
        if state.detector is not None and state.detector.step(int(reward)).restart:
            state.restart()
            self.restarts.append((arm, t))
            restarted = True
        self._n[arm] = state.N
        self._empty[arm] = not state.losses
        if state.losses:
            self._risk[arm] = arm_risk(state, self.cfg.measure)
        return restarted


class RBOCPDRiskLCB(RiskLCB):
    name = "rbocpd_risk_lcb"

    def __init__(self, n_arms: int, cfg: Optional[PolicyConfig] = None):
        super().__init__(n_arms, cfg, detector="rbocpd")


class GLRRiskLCB(RiskLCB):
    name = "glr_risk_lcb"

    def __init__(self, n_arms: int, cfg: Optional[PolicyConfig] = None):
        super().__init__(n_arms, cfg, detector="glr")


class DiscountedRiskLCB(BasePolicy):
    """Discounted Risk-LCB with global-time weights ``discount ** (t - s)``.

    Losses are bits, so the discounted risk only needs each arm's discounted
    count and discounted count of ones.
    """

    name = "discounted_risk_lcb"

    def reset(self) -> None:
        super().reset()
        self._w = np.zeros(self.n_arms)
        self._w1 = np.zeros(self.n_arms)

    def indices(self, t: int) -> np.ndarray:
        m = self.cfg.measure
        out = np.full(self.n_arms, -np.inf)
        scale = self.cfg.width_scale(t)
        for a in range(self.n_arms):
            n = self._w[a]
            if n > 0:
                out[a] = binary_risk(self._w1[a], n, m) - scale / math.sqrt(n)
        return out

    def update(self, t: int, arm: int, reward: int) -> bool:
        g = self.cfg.discount
        self._w *= g
        self._w1 *= g
        self._w[arm] += 1.0
        self._w1[arm] += 1 - int(reward)
        return False


class SlidingWindowRiskLCB(BasePolicy):
    """Sliding-window Risk-LCB over the last ``window`` global steps."""

    name = "sliding_window_risk_lcb"

    def reset(self) -> None:
        super().reset()
        self._buf: deque = deque()
        self._cnt = np.zeros(self.n_arms, dtype=np.int64)
        self._ones = np.zeros(self.n_arms, dtype=np.int64)

    def indices(self, t: int) -> np.ndarray:
        tau = self.cfg.window if self.cfg.window is not None else t
        buf = self._buf
        while buf and buf[0][0] < t - tau:
            _, a, loss = buf.popleft()
            self._cnt[a] -= 1
            self._ones[a] -= loss
        m = self.cfg.measure
        scale = self.cfg.width_scale(t)
        out = np.full(self.n_arms, -np.inf)
        for a in range(self.n_arms):
            n = int(self._cnt[a])
            if n > 0:
                out[a] = binary_risk(int(self._ones[a]), n, m) - scale / math.sqrt(n)
        return out

    def update(self, t: int, arm: int, reward: int) -> bool:
        loss = 1 - int(reward)
        self._buf.append((t, arm, loss))
        self._cnt[arm] += 1
        self._ones[arm] += loss
        return False


class OraclePolicy(BasePolicy):
    """Plays ``argmin_a rho(nu_{a,t})`` using the true means; never explores."""

    name = "oracle"

    def __init__(self, instance: SwitchingBanditInstance, cfg: Optional[PolicyConfig] = None):
        self.instance = instance
        cfg = cfg if cfg is not None else PolicyConfig()
        super().__init__(instance.n_arms, replace(cfg, beta=0.0, beta_mode="fixed"))
        self._risks = instance.risk_matrix(self.cfg.measure)

    def indices(self, t: int) -> np.ndarray:
        return self._risks[t - 1]

    def update(self, t: int, arm: int, reward: int) -> bool:
        return False


def oracle_policy(instance: SwitchingBanditInstance, measure: RiskMeasure) -> np.ndarray:
    """The oracle's arm at every step (0-based)."""
    return np.argmin(instance.risk_matrix(measure), axis=1)


POLICIES = {
    "risk_lcb": RiskLCB,
    "rbocpd_risk_lcb": RBOCPDRiskLCB,
    "glr_risk_lcb": GLRRiskLCB,
    "discounted_risk_lcb": DiscountedRiskLCB,
    "sliding_window_risk_lcb": SlidingWindowRiskLCB,
    "oracle": OraclePolicy,
}


def make_policy(name: str, instance: SwitchingBanditInstance,
                cfg: Optional[PolicyConfig] = None) -> BasePolicy:
    if name not in POLICIES:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(POLICIES)}")
    if name == "oracle":
        return OraclePolicy(instance, cfg)
    return POLICIES[name](instance.n_arms, cfg)


def policy_step(policy: BasePolicy, t: int, arm: int, reward: int) -> bool:
    return policy.update(t, arm, reward)


def simulate(policy: BasePolicy, instance: SwitchingBanditInstance,
             uniforms: np.ndarray, rng: np.random.Generator) -> ActionTrace:
    """Run ``policy`` for the whole horizon.

    ``uniforms`` is the ``(T, A)`` coupling matrix from
    :func:`riskbandit.env.reward_uniforms`; ``rng`` drives only the policy's
    own randomization.
    """
    horizon = instance.horizon
    rewards_of = uniforms < instance.means
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int8)
    forced = np.zeros(horizon, dtype=bool)
    select, update = policy.select, policy.update
    for t in range(1, horizon + 1):
        a, f = select(t, rng)
        x = int(rewards_of[t - 1, a])
        update(t, a, x)
        actions[t - 1] = a
        rewards[t - 1] = x
        forced[t - 1] = f
    return ActionTrace(actions, rewards, forced, list(policy.restarts),
                       policy.restart_counts())
