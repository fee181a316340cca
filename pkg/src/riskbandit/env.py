"""Piecewise-stationary Bernoulli switching bandits and rho-regret.

Arms are 0-based in the Python API and 1-based in CSV files. Time steps are
1-based everywhere (segments are inclusive ``[start, end]`` ranges).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .risk import RiskMeasure

Segment = Tuple[int, int, float]


class InstanceFormatError(ValueError):
    """Malformed instance CSV; ``line`` is the offending 1-based line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SwitchingBanditInstance:
    """Per-arm piecewise-constant Bernoulli reward means over ``[1, T]``."""

    segments: Tuple[Tuple[Segment, ...], ...]
    horizon: int = field(init=False)

    def __post_init__(self) -> None:
        segs = tuple(tuple((int(a), int(b), float(m)) for a, b, m in arm)
                     for arm in self.segments)
        object.__setattr__(self, "segments", segs)
        if len(segs) < 2:
            raise ValueError("need at least two arms")
        horizon = segs[0][-1][1] if segs[0] else 0
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        for a, arm in enumerate(segs):
            expected = 1
            for start, end, mean in arm:
                if start != expected or end < start:
                    raise ValueError(f"arm {a}: segments must partition [1, T] without gaps")
                if not (0.0 <= mean <= 1.0):
                    raise ValueError(f"arm {a}: mean {mean} outside [0, 1]")
                expected = end + 1
            if expected - 1 != horizon:
                raise ValueError(f"arm {a}: segments end at {expected - 1}, expected {horizon}")
        object.__setattr__(self, "horizon", horizon)

    @property
    def n_arms(self) -> int:
        return len(self.segments)

    @property
    def n_changes(self) -> int:
        """K_T: total number of per-arm changes."""
        return sum(len(arm) - 1 for arm in self.segments)

    @property
    def arm_changes(self) -> List[Tuple[int, int]]:
        """``(arm, t)`` for every per-arm change, sorted by time."""
        out = [(a, seg[0]) for a, arm in enumerate(self.segments) for seg in arm[1:]]
        return sorted(out, key=lambda x: (x[1], x[0]))

    @property
    def change_points(self) -> List[int]:
        """Distinct times at which at least one arm changes."""
        return sorted({t for _, t in self.arm_changes})

    @cached_property
    def means(self) -> np.ndarray:
        """Dense ``(T, A)`` matrix of reward means; row ``t - 1`` is step ``t``."""
        out = np.empty((self.horizon, self.n_arms))
        for a, arm in enumerate(self.segments):
            for start, end, mean in arm:
                out[start - 1:end, a] = mean
        out.setflags(write=False)
        return out

    def mean(self, a: int, t: int) -> float:
        self._check(a, t)
        return float(self.means[t - 1, a])

    def _check(self, a: int, t: int) -> None:
        if not (0 <= a < self.n_arms):
            raise ValueError(f"arm {a} out of range")
        if not (1 <= t <= self.horizon):
            raise ValueError(f"time {t} out of range")

    def min_change_gap(self) -> float:
        """Smallest mean jump over all per-arm changes (inf if none)."""
        gaps = [abs(arm[i][2] - arm[i - 1][2])
                for arm in self.segments for i in range(1, len(arm))]
        return min(gaps, default=math.inf)

    def risk_matrix(self, measure: RiskMeasure) -> np.ndarray:
        """``(T, A)`` matrix of true risks on the loss scale."""
        return _risk_of_means(self.means, measure)

    def min_risk_gap(self, measure: RiskMeasure) -> float:
        """Smallest positive risk suboptimality gap over all segments."""
        risks = self.risk_matrix(measure)
        gaps = risks - risks.min(axis=1, keepdims=True)
        positive = gaps[gaps > 1e-12]
        return float(positive.min()) if positive.size else math.inf


def _risk_of_means(means: np.ndarray, measure: RiskMeasure) -> np.ndarray:
    p = 1.0 - means
    if measure.kind == "cvar":
        return np.minimum(1.0, p / measure.level)
    return p + measure.level * p * (1.0 - p)


def _draw_mean(rng: np.random.Generator, previous: Optional[float], gap: float) -> float:
    # uniform on {m in [0, 1] : |m - previous| >= gap}
    if previous is None:
        lo_hi = [(0.0, 1.0 - gap), (gap, 1.0)] if gap > 0.5 else [(0.0, 1.0)]
    else:
        lo_hi = [(0.0, previous - gap), (previous + gap, 1.0)]
    lo_hi = [(lo, hi) for lo, hi in lo_hi if hi >= lo]
    widths = np.array([hi - lo for lo, hi in lo_hi])
    if widths.sum() <= 0:
        lo, hi = lo_hi[0]
        return lo
    u = rng.random() * widths.sum()
    for (lo, hi), w in zip(lo_hi, widths):
        if u <= w:
            return lo + u
        u -= w
    return lo_hi[-1][1]


def _place_changes(rng: np.random.Generator, k: int, horizon: int, min_seg: int) -> List[int]:
    # k sorted change times with every segment (including the ends) >= min_seg
    slack = horizon - (k + 1) * min_seg
    u = np.sort(rng.integers(0, slack + 1, size=k))
    return [1 + (j + 1) * min_seg + int(u[j]) for j in range(k)]


def default_min_segment(horizon: int, n_changes: int) -> int:
    return max(1, horizon // (4 * (n_changes + 1)))


def generate_instance(n_arms: int, horizon: int, n_changes: int, gap: float,
                      min_seg: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None,
                      global_switch: bool = False) -> SwitchingBanditInstance:
    """Random switching-bandit instance with detectable changes.

    Each of the ``n_changes`` changes hits one uniformly chosen arm (local
    switches); with ``global_switch`` every arm changes at each of the
    ``n_changes`` change points instead. Consecutive means of an arm differ
    by at least ``gap`` and every segment lasts at least ``min_seg`` steps.
    """
    if n_arms < 2:
        raise ValueError("need at least two arms")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if n_changes < 0:
        raise ValueError("number of changes must be nonnegative")
    if not (0.0 < gap < 1.0):
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    if min_seg is None:
        min_seg = default_min_segment(horizon, n_changes)
    if min_seg < 1:
        raise ValueError("min_seg must be at least 1")
    per_arm_cap = horizon // min_seg - 1
    if n_changes * min_seg > horizon or (n_changes > 0 and per_arm_cap < 1):
        raise ValueError(f"infeasible: {n_changes} changes with min_seg={min_seg} "
                         f"do not fit in T={horizon}")
    if global_switch and n_changes > per_arm_cap:
        raise ValueError("infeasible: global changes do not fit in the horizon")
    if not global_switch and n_changes > n_arms * per_arm_cap:
        raise ValueError("infeasible: too many changes for the horizon and min_seg")
    rng = rng if rng is not None else np.random.default_rng()

    if global_switch:
        times = _place_changes(rng, n_changes, horizon, min_seg)
        per_arm = [times] * n_arms
    else:
        while True:
            counts = np.bincount(rng.integers(0, n_arms, size=n_changes), minlength=n_arms)
            if counts.max(initial=0) <= per_arm_cap:
                break
        per_arm = [_place_changes(rng, int(c), horizon, min_seg) for c in counts]

    segments = []
    for times in per_arm:
        bounds = [1] + list(times) + [horizon + 1]
        mean = None
        arm = []
        for start, stop in zip(bounds[:-1], bounds[1:]):
            mean = _draw_mean(rng, mean, gap)
            arm.append((start, stop - 1, mean))
        segments.append(tuple(arm))
    return SwitchingBanditInstance(tuple(segments))


def stationary_instance(means: Sequence[float], horizon: int) -> SwitchingBanditInstance:
    return SwitchingBanditInstance(tuple(((1, horizon, float(m)),) for m in means))


def reward_uniforms(horizon: int, n_arms: int, rng: np.random.Generator) -> np.ndarray:
    """Shared uniforms coupling rewards across algorithms: the reward of arm
    ``a`` at step ``t`` is ``u[t - 1, a] < mean``."""
    return rng.random((horizon, n_arms))


def sample_reward(instance: SwitchingBanditInstance, a: int, t: int,
                  rng: np.random.Generator) -> int:
    mu = instance.mean(a, t)
    return int(rng.random() < mu)


def true_risk(instance: SwitchingBanditInstance, a: int, t: int,
              measure: RiskMeasure) -> float:
    return measure.bernoulli(1.0 - instance.mean(a, t))


@dataclass
class RegretTrace:
    instantaneous: np.ndarray
    cumulative: np.ndarray
    change_points: List[Tuple[int, int]] = field(default_factory=list)
    restarts: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def final(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0


def rho_regret(actions: Sequence[int], instance: SwitchingBanditInstance,
               measure: RiskMeasure, restarts=()) -> RegretTrace:
    """Per-step excess true risk of the chosen arms over the per-step best arm.

    ``actions`` may be an ``ActionTrace`` or a plain sequence of 0-based arms.
    """
    if hasattr(actions, "actions"):
        restarts = list(getattr(actions, "restarts", restarts))
        actions = actions.actions
    acts = np.asarray(actions, dtype=np.int64)
    if acts.size != instance.horizon:
        raise ValueError(f"trace has {acts.size} steps, instance has {instance.horizon}")
    if acts.size and (acts.min() < 0 or acts.max() >= instance.n_arms):
        raise ValueError("action out of range")
    risks = instance.risk_matrix(measure)
    chosen = risks[np.arange(acts.size), acts]
    inst = np.maximum(chosen - risks.min(axis=1), 0.0)
    return RegretTrace(inst, np.cumsum(inst), instance.arm_changes, list(restarts))


def segment_regret(actions: Sequence[int], instance: SwitchingBanditInstance,
                   measure: RiskMeasure) -> float:
    """Total rho-regret in segment form: pulled risk minus, for each stationary
    stretch between global change points, its length times the best risk."""
    acts = np.asarray(getattr(actions, "actions", actions), dtype=np.int64)
    pulled = sum(true_risk(instance, int(a), t, measure)
                 for t, a in enumerate(acts, start=1))
    bounds = [1] + instance.change_points + [instance.horizon + 1]
    best = 0.0
    for start, stop in zip(bounds[:-1], bounds[1:]):
        best += (stop - start) * min(true_risk(instance, a, start, measure)
                                     for a in range(instance.n_arms))
    return pulled - best


HEADER = ["arm", "start", "end", "mean"]


def write_instance_csv(instance: SwitchingBanditInstance, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(dump_instance_csv(instance))


def dump_instance_csv(instance: SwitchingBanditInstance) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for a, arm in enumerate(instance.segments, start=1):
        for start, end, mean in arm:
            writer.writerow([a, start, end, repr(float(mean))])
    return buf.getvalue()


def load_instance_csv(path) -> SwitchingBanditInstance:
    """Read an ``arm,start,end,mean`` segment table (1-based, inclusive)."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_instance_csv(fh.read())


def parse_instance_csv(text: str) -> SwitchingBanditInstance:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip().lower() for c in rows[0]] != HEADER:
        raise InstanceFormatError("header must be 'arm,start,end,mean'", 1)
    by_arm = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise InstanceFormatError(f"expected 4 fields, got {len(row)}", line)
        try:
            arm, start, end = (int(c) for c in row[:3])
            mean = float(row[3])
        except ValueError:
            raise InstanceFormatError(f"cannot parse row {row!r}", line) from None
        if arm < 1:
            raise InstanceFormatError(f"arm ids are 1-based, got {arm}", line)
        if not (0.0 <= mean <= 1.0):
            raise InstanceFormatError(f"mean {mean} outside [0, 1]", line)
        if start < 1 or end < start:
            raise InstanceFormatError(f"bad segment [{start}, {end}]", line)
        by_arm.setdefault(arm, []).append((start, end, mean, line))
    if not by_arm:
        raise InstanceFormatError("no segments")
    n_arms = max(by_arm)
    missing = sorted(set(range(1, n_arms + 1)) - set(by_arm))
    if missing:
        raise InstanceFormatError(f"arm(s) {missing} have no segments")
    horizon = None
    segments = []
    for arm in range(1, n_arms + 1):
        segs = sorted(by_arm[arm])
        expected = 1
        for start, end, _, line in segs:
            if start < expected:
                raise InstanceFormatError(f"arm {arm}: segment overlaps the previous one", line)
            if start > expected:
                raise InstanceFormatError(f"arm {arm}: gap before step {start}", line)
            expected = end + 1
        last_line = segs[-1][3]
        if horizon is None:
            horizon = expected - 1
        elif expected - 1 != horizon:
            raise InstanceFormatError(
                f"arm {arm}: segments end at {expected - 1}, other arms at {horizon}", last_line)
        segments.append(tuple((s, e, m) for s, e, m, _ in segs))
    if n_arms < 2:
        raise InstanceFormatError("need at least two arms")
    return SwitchingBanditInstance(tuple(segments))
