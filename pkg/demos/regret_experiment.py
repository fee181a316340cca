"""
A seeded multi-replication experiment
=====================================

The harness reads an INI config, runs every algorithm on each replication
and writes mean regret curves (CSV), event logs and an SVG chart.
"""

from dataclasses import replace
from pathlib import Path

from riskbandit import load_config, run_experiment

here = Path(__file__).resolve().parent
config = load_config(here.parent / "configs" / "local_switch.ini")

# A smaller version of the shipped config so that the demo runs in seconds.
config = replace(config, replications=4,
                 environment=replace(config.environment, horizon=8000),
                 output_dir=here / "out" / "regret_experiment")
summary = run_experiment(config)

for name, algo in summary.algorithms.items():
    print(f"{name:24s} {algo.final_mean:8.1f} +- {algo.final_std:6.1f}"
          f"  restarts/arm {algo.restarts_per_arm:.2f}  forced {algo.forced_fraction:.3f}")
print("outputs in", config.output_dir)
