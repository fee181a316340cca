"""
Detecting a change in a Bernoulli stream
========================================

The restarted Bayesian detector keeps one Laplace forecaster per candidate
change time and restarts when a challenger outweighs the forecaster that
has seen the whole stream.
"""

import numpy as np

from riskbandit import RBOCPD, detect_stream, glr_detect

rng = np.random.default_rng(1)

# 600 draws at mean 0.3, then 400 at mean 0.7.
means = np.r_[np.full(600, 0.3), np.full(400, 0.7)]
bits = (rng.random(means.size) < means).astype(int)

bank = RBOCPD(delta=0.05)
for z in bits:
    report = bank.step(z)
    if report.restart:
        print(f"restart at t={report.t}, most likely change at s={report.trigger_s}")
        break
print("bank size when it fired:", len(bank))

# detect_stream resets after each detection, as a bandit arm would.
print("all detections:", detect_stream(bits, 0.05))
print("GLR test on the same stream fires at", glr_detect(bits, 0.05))

# Smaller shifts take longer to detect.
for gap in (0.6, 0.4, 0.2):
    delays = []
    for seed in range(50):
        u = np.random.default_rng([seed, 7]).random(3000)
        lo = 0.5 - gap / 2
        z = u < np.where(np.arange(3000) < 500, lo, lo + gap)
        hits = [h for h in detect_stream(z, 0.05) if h > 500]
        if hits:
            delays.append(hits[0] - 500)
    print(f"gap {gap}: mean delay {np.mean(delays):7.1f} over {len(delays)} detections")
