"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are printed in
the pytest terminal summary (see conftest.py). Run alone with
``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from oracles import quantile_integral_cvar
from riskbandit.cli import main as cli_main
from riskbandit.config import load_config
from riskbandit.cpd import RBOCPD, detect_stream, rbocpd_batch
from riskbandit.harness import run_experiment
from riskbandit.policies import default_beta
from riskbandit.risk import empirical_cvar, weighted_empirical_cvar
from riskbandit.theory import f_term, risk_lcb_regret_bound

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
VERDICTS = []


def verdict(num, ok, detail):
    VERDICTS.append(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    return ok


def first_restart(seq, delta):
    bank = RBOCPD(delta)
    for z in seq:
        rep = bank.step(int(z))
        if rep.restart:
            return rep.t
    return None


def local_switch_config(horizon=40000):
    cfg = load_config(CONFIGS / "local_switch.ini")
    algos = [a for a in cfg.algorithms if a.name != "glr_risk_lcb"]
    return replace(cfg, algorithms=algos, output_dir=None,
                   environment=replace(cfg.environment, horizon=horizon))


@pytest.fixture(scope="module")
def local_switch_runs():
    out = {}
    for horizon in (40000, 10000):
        t0 = time.perf_counter()
        out[horizon] = (run_experiment(local_switch_config(horizon), write=False),
                        time.perf_counter() - t0)
    return out


def test_c1_cvar_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    alphas = np.round(np.arange(1, 11) / 10, 10)
    worst = worst_w = 0.0
    for _ in range(1000):
        xs = rng.random(int(rng.integers(1, 51)))
        for a in alphas:
            v = empirical_cvar(xs, a)
            worst = max(worst, abs(v - quantile_integral_cvar(xs, a)))
            worst_w = max(worst_w, abs(weighted_empirical_cvar(xs, np.full(xs.size, 0.37), a) - v))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and worst_w <= 1e-12 and elapsed < 10
    verdict(1, ok, f"max |cvar - oracle| = {worst:.2e}, weighted/unweighted = {worst_w:.2e}, "
                   f"{elapsed:.1f}s")
    assert ok


def test_c2_false_alarm_calibration():
    t0 = time.perf_counter()
    fractions = {}
    for j, p in enumerate((0.2, 0.5, 0.8)):
        alarms = 0
        for i in range(500):
            z = np.random.default_rng([202, j, i]).random(2000) < p
            alarms += first_restart(z, 0.05) is not None
        fractions[p] = alarms / 500
    elapsed = time.perf_counter() - t0
    ok = max(fractions.values()) <= 0.07 and elapsed < 120
    verdict(2, ok, "false-alarm fraction by p " +
            ", ".join(f"{p}: {f:.3f}" for p, f in fractions.items()) + f" (<= 0.07), {elapsed:.0f}s")
    assert ok


def _delays(gap, runs=500, length=2000, change=500):
    lo = 0.5 - gap / 2
    delays = []
    for i in range(runs):
        u = np.random.default_rng([303, int(gap * 100), i]).random(length)
        mean = np.where(np.arange(1, length + 1) < change, lo, lo + gap)
        hits = [h for h in detect_stream(u < mean, 0.05) if h >= change]
        if hits:
            delays.append(hits[0] - change)
    return len(delays) / runs, float(np.mean(delays)) if delays else float("inf")


def test_c3_detection_power_and_delay():
    t0 = time.perf_counter()
    power_04, delay_04 = _delays(0.4)
    power_02, delay_02 = _delays(0.2)
    elapsed = time.perf_counter() - t0
    ok = power_04 >= 0.95 and delay_04 < delay_02 and elapsed < 120
    verdict(3, ok, f"power at gap 0.4 = {power_04:.3f} (>= 0.95); mean delay 0.4: {delay_04:.1f} "
                   f"< 0.2: {delay_02:.1f}; {elapsed:.0f}s")
    assert ok


def test_c4_incremental_batch_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    mismatches = fired = 0
    for i in range(200):
        n = int(rng.integers(1, 301))
        delta = (0.01, 0.05, 0.2)[i % 3]
        c = int(rng.integers(1, n + 1))
        p = rng.random(2)
        z = (rng.random(n) < np.where(np.arange(n) < c, p[0], p[1])).astype(int)
        a, b = first_restart(z, delta), rbocpd_batch(z, delta)
        mismatches += a != b
        fired += a is not None
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    verdict(4, ok, f"{mismatches} mismatches on 200 sequences ({fired} with a restart), {elapsed:.0f}s")
    assert ok


def test_c5_local_switch_ordering(local_switch_runs):
    summary, elapsed = local_switch_runs[40000]
    finals = {n: a.final_mean for n, a in summary.algorithms.items()}
    ours = finals["rbocpd_risk_lcb"]
    baselines = ("risk_lcb", "discounted_risk_lcb", "sliding_window_risk_lcb")
    ok = (all(ours < finals[b] for b in baselines) and finals["oracle"] == 0.0
          and elapsed < 900)
    verdict(5, ok, "final regret " + ", ".join(f"{n} {v:.1f}" for n, v in finals.items())
            + f"; {summary.replications} reps, {elapsed:.0f}s")
    assert ok


def test_c6_stationary_degeneracy():
    cfg = load_config(CONFIGS / "stationary.ini")
    cfg = replace(cfg, output_dir=None,
                  algorithms=[a for a in cfg.algorithms if a.name != "oracle"])
    assert cfg.environment.changes == 0 and cfg.environment.horizon == 10000
    assert cfg.replications == 30
    s = run_experiment(cfg, write=False)
    ours, plain = s["rbocpd_risk_lcb"], s["risk_lcb"]
    ratio = ours.final_mean / plain.final_mean if plain.final_mean > 0 else 1.0
    ok = 0.5 <= ratio <= 2.0 and ours.restarts_per_arm <= 0.15
    verdict(6, ok, f"regret ratio {ratio:.3f} (within factor 2), restarts per arm "
                   f"{ours.restarts_per_arm:.3f} (<= 0.15)")
    assert ok


def test_c7_sublinear_growth(local_switch_runs):
    long_ = local_switch_runs[40000][0]["rbocpd_risk_lcb"].final_mean
    short = local_switch_runs[10000][0]["rbocpd_risk_lcb"].final_mean
    ratio = long_ / short
    ok = ratio <= 3.0
    verdict(7, ok, f"regret T=40000 / T=10000 = {long_:.1f} / {short:.1f} = {ratio:.3f} (<= 3.0)")
    assert ok


def test_c8_theory_spot_values():
    r = risk_lcb_regret_bound(1000, 1.0, 0.5, [0.6], 2)
    f = f_term(1, 1)
    b = default_beta(5, 6, 40000)
    ok = abs(r - 705636) / 705636 <= 1e-3 and abs(f - 1.8181) <= 1e-3 and abs(b - 0.027386) <= 1e-6
    verdict(8, ok, f"regret bound {r:.2f}, f(1,1) {f:.5f}, beta {b:.6f}")
    assert ok


def test_c9_cli_determinism(tmp_path):
    cfg = tmp_path / "det.ini"
    cfg.write_text((CONFIGS / "local_switch.ini").read_text()
                   .replace("horizon = 40000", "horizon = 4000")
                   .replace("output_dir = ../results/local_switch", "output_dir = out"))
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert cli_main(["run", "--config", str(cfg), "--reps", "2", "--out", str(d)]) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(d.glob("*.csv"))})
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    verdict(9, ok, f"{len(outs[0])} CSV files bit-identical across two runs")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
