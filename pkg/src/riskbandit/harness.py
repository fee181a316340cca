"""Seeded multi-replication experiments and their file outputs."""
from __future__ import annotations

import csv
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .config import ConfigError, ExperimentConfig, resolve_policy_config
from .env import (SwitchingBanditInstance, generate_instance, load_instance_csv,
                  reward_uniforms, rho_regret)
from .policies import make_policy, simulate

Event = Tuple[int, int, int, str]  # (replication, t, arm, kind); arm 0-based


@dataclass
class AlgorithmSummary:
    name: str
    mean_regret: np.ndarray
    std_regret: np.ndarray
    final_regrets: np.ndarray
    restart_counts: np.ndarray  # (replications, A)
    forced_fraction: float
    events: List[Event] = field(default_factory=list)

    @property
    def final_mean(self) -> float:
        return float(self.final_regrets.mean())

    @property
    def final_std(self) -> float:
        return float(self.final_regrets.std())

    @property
    def restarts_per_arm(self) -> float:
        return float(self.restart_counts.mean())


@dataclass
class RunSummary:
    horizon: int
    n_arms: int
    replications: int
    algorithms: Dict[str, AlgorithmSummary]

    def __getitem__(self, name: str) -> AlgorithmSummary:
        return self.algorithms[name]


@dataclass
class _ReplicationResult:
    index: int
    change_points: List[Tuple[int, int]]
    per_algo: Dict[str, tuple]


def _seed(config: ExperimentConfig, i: int) -> int:
    return config.base_seed + i


def build_instance(config: ExperimentConfig, i: int = 0) -> SwitchingBanditInstance:
    """The environment realization used by replication ``i``."""
    env = config.environment
    if env.kind == "file":
        return load_instance_csv(env.path)
    seed = env.seed if env.seed is not None else _seed(config, i)
    rng = np.random.default_rng([seed, 0])
    return generate_instance(env.arms, env.horizon, env.changes, env.gap,
                             min_seg=env.min_segment, rng=rng,
                             global_switch=env.global_switch)


def _replicate(config: ExperimentConfig, i: int) -> _ReplicationResult:
    instance = build_instance(config, i)
    seed = _seed(config, i)
    uniforms = reward_uniforms(instance.horizon, instance.n_arms,
                               np.random.default_rng([seed, 1]))
    per_algo = {}
    for algo in config.algorithms:
        cfg = resolve_policy_config(config, algo, instance.n_arms,
                                    instance.n_changes, instance.horizon)
        policy = make_policy(algo.name, instance, cfg)
        rng = np.random.default_rng([seed, zlib.crc32(algo.name.encode())])
        trace = simulate(policy, instance, uniforms, rng)
        regret = rho_regret(trace, instance, config.measure)
        per_algo[algo.name] = (regret.cumulative, trace.restarts,
                               trace.restart_counts, trace.forced_fraction)
    return _ReplicationResult(i, instance.arm_changes, per_algo)


def worker_count(replications: int, workers: Optional[int] = None) -> int:
    if workers is None:
        raw = os.environ.get("RISKBANDIT_THREADS")
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise ConfigError(f"RISKBANDIT_THREADS must be an integer, got {raw!r}") from None
        else:
            workers = os.cpu_count() or 1
    return max(1, min(int(workers), replications))


def _check_feasible(config: ExperimentConfig) -> SwitchingBanditInstance:
    # surfaces infeasible or unreadable environments before any run starts
    return build_instance(config, 0)


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None,
                   write: bool = True) -> RunSummary:
    """Run every algorithm on ``config.replications`` seeded replications.

    Replication ``i`` uses seed ``base_seed + i`` for its environment, its
    reward draws (shared by all algorithms) and each algorithm's own
    randomization. Aggregation happens in replication order, so the
    result does not depend on the worker count. Outputs are written to
    ``config.output_dir`` when ``write`` is true and a directory is set.
    """
    first = _check_feasible(config)
    horizon, n_arms = first.horizon, first.n_arms
    reps = config.replications
    names = [a.name for a in config.algorithms]
    if len(set(names)) != len(names):
        raise ConfigError("algorithm names must be unique")

    mean = {n: np.zeros(horizon) for n in names}
    m2 = {n: np.zeros(horizon) for n in names}
    finals = {n: np.zeros(reps) for n in names}
    counts = {n: np.zeros((reps, n_arms), dtype=np.int64) for n in names}
    forced = {n: 0.0 for n in names}
    events: Dict[str, List[Event]] = {n: [] for n in names}

    n_workers = worker_count(reps, workers)
    if n_workers == 1:
        results = (_replicate(config, i) for i in range(reps))
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=n_workers)
        results = pool.map(_replicate, [config] * reps, range(reps))
    try:
        for k, res in enumerate(results, start=1):
            for name in names:
                cum, restarts, rc, ff = res.per_algo[name]
                delta = cum - mean[name]
                mean[name] += delta / k
                m2[name] += delta * (cum - mean[name])
                finals[name][res.index] = cum[-1]
                counts[name][res.index] = rc
                forced[name] += ff
                evs = [(res.index + 1, t, a, "change_point") for a, t in res.change_points]
                evs += [(res.index + 1, t, a, "restart") for a, t in restarts]
                events[name].extend(sorted(evs, key=lambda e: (e[1], e[2], e[3])))
    finally:
        if pool is not None:
            pool.shutdown()

    algos = {}
    for name in names:
        std = np.sqrt(np.maximum(m2[name] / reps, 0.0))
        algos[name] = AlgorithmSummary(name, mean[name], std, finals[name],
                                       counts[name], forced[name] / reps, events[name])
    summary = RunSummary(horizon, n_arms, reps, algos)
    if write and config.output_dir is not None:
        emit_csv(summary, config.output_dir)
        emit_svg(summary, config.output_dir)
    return summary


def emit_csv(summary: RunSummary, directory) -> List[Path]:
    """``regret_<algo>.csv``, ``events_<algo>.csv`` and ``summary.csv``.

    Arms and replications are 1-based in the files.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc.strerror}") from None
    written = []
    for name, algo in summary.algorithms.items():
        path = directory / f"regret_{name}.csv"
        lines = ["t,mean_cumulative_regret,std"]
        lines += [f"{t},{m!r},{s!r}" for t, m, s in
                  zip(range(1, summary.horizon + 1), algo.mean_regret.tolist(),
                      algo.std_regret.tolist())]
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)

        path = directory / f"events_{name}.csv"
        lines = ["replication,t,arm,event"]
        lines += [f"{r},{t},{a + 1},{kind}" for r, t, a, kind in algo.events]
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)

    path = directory / "summary.csv"
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "final_mean", "final_std", "restarts_per_arm",
                    "forced_fraction"])
        for name, algo in summary.algorithms.items():
            w.writerow([name, repr(algo.final_mean), repr(algo.final_std),
                        repr(algo.restarts_per_arm), repr(algo.forced_fraction)])
    written.append(path)
    return written


def _open(path: Path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def _write_text(path: Path, text: str) -> None:
    with _open(path) as fh:
        fh.write(text)


PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


def _nice_ticks(hi: float, n: int = 5) -> List[float]:
    if hi <= 0:
        return [0.0, 1.0]
    raw = hi / n
    mag = 10 ** np.floor(np.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    return [float(k * step) for k in range(int(np.ceil(hi / step)) + 1)]


def _fmt(v: float) -> str:
    return f"{v:g}" if abs(v) < 1e6 else f"{v:.3g}"


def render_svg(summary: RunSummary, width: int = 800, height: int = 500,
               max_points: int = 1000) -> str:
    """Static SVG line chart of the mean traces with a +-1 std band."""
    left, right, top, bottom = 80, 220, 40, 60
    pw, ph = width - left - right, height - top - bottom
    T = summary.horizon
    idx = np.unique(np.linspace(0, T - 1, min(T, max_points)).round().astype(int))
    y_hi = max([float((a.mean_regret + a.std_regret).max()) for a in summary.algorithms.values()]
               + [0.0])
    yticks = _nice_ticks(y_hi)
    xticks = _nice_ticks(T)
    y_top, x_top = yticks[-1], xticks[-1]

    def px(t):
        return left + pw * (np.asarray(t, float) / x_top)

    def py(v):
        return top + ph * (1.0 - np.asarray(v, float) / y_top)

    def pts(xs, ys):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="15">'
           f'Average cumulative regret ({summary.replications} replications)</text>']
    for v in yticks:
        y = py(v)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    for v in xticks:
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(v)}</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">time step t</text>')
    out.append(f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + ph / 2})">cumulative rho-regret</text>')

    xs = px(idx + 1)
    for k, (name, algo) in enumerate(summary.algorithms.items()):
        color = PALETTE[k % len(PALETTE)]
        m, s = algo.mean_regret[idx], algo.std_regret[idx]
        lo, hi = np.maximum(m - s, 0.0), m + s
        band = pts(np.concatenate([xs, xs[::-1]]), np.concatenate([py(hi), py(lo)[::-1]]))
        out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        out.append(f'<polyline points="{pts(xs, py(m))}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        ly = top + 10 + 20 * k
        lx = left + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(summary: RunSummary, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "regret.svg"
    _write_text(path, render_svg(summary))
    return path
