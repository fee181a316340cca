"""Command-line entry point: ``riskbandit {run,detect,bounds,gen-env}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
Errors go to standard error as a single line starting with ``error:``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ConfigError, load_config, resolve_policy_config
from .cpd import detect_stream
from .env import generate_instance, write_instance_csv
from .harness import build_instance, run_experiment
from .theory import BoundInputs, bound_table

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riskbandit", description="Risk-averse switching bandit experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="base seed (overrides the config)")
    run.add_argument("--reps", type=int, help="replications (overrides the config)")

    det = sub.add_parser("detect", help="run a change detector on a bit stream")
    det.add_argument("--input", required=True, help="one-column CSV of 0/1 values")
    det.add_argument("--delta", type=float, required=True)
    det.add_argument("--detector", choices=("rbocpd", "glr"), default="rbocpd")
    det.add_argument("--out", help="write the CSV here instead of standard output")

    bnd = sub.add_parser("bounds", help="print theory bounds for a config")
    bnd.add_argument("--config", required=True)

    gen = sub.add_parser("gen-env", help="write a random instance CSV")
    gen.add_argument("--A", type=int, required=True, dest="arms")
    gen.add_argument("--T", type=int, required=True, dest="horizon")
    gen.add_argument("--K", type=int, required=True, dest="changes")
    gen.add_argument("--lambda", type=float, required=True, dest="gap")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--min-seg", type=int, dest="min_seg")
    gen.add_argument("--global", action="store_true", dest="global_switch")
    return p


def _read_bits(path: Path) -> np.ndarray:
    if not path.is_file():
        raise UsageError(f"input not found: {path}")
    bits = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        cell = line.split(",")[0].strip()
        if not cell:
            continue
        if cell in ("0", "1"):
            bits.append(int(cell))
        elif lineno == 1 and not bits:
            continue  # header
        else:
            raise ValueError(f"{path}:{lineno}: expected 0 or 1, got {cell!r}")
    return np.asarray(bits, dtype=np.int8)


def cmd_run(args) -> int:
    config = load_config(args.config).with_overrides(args.out, args.seed, args.reps)
    if config.output_dir is None:
        raise UsageError("no output directory: set output_dir or pass --out")
    summary = run_experiment(config)
    width = max(len(n) for n in summary.algorithms)
    for name, algo in summary.algorithms.items():
        print(f"{name:<{width}}  final regret {algo.final_mean:10.2f} +- {algo.final_std:8.2f}"
              f"  restarts/arm {algo.restarts_per_arm:6.2f}")
    print(f"wrote {config.output_dir}")
    return 0


def cmd_detect(args) -> int:
    if not (0.0 < args.delta < 1.0):
        raise UsageError("--delta must lie in (0, 1)")
    bits = _read_bits(Path(args.input))
    hits = detect_stream(bits, args.delta, detector=args.detector)
    text = "t,restart\n" + "".join(f"{t},1\n" for t in hits)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_bounds(args) -> int:
    config = load_config(args.config)
    instance = build_instance(config, 0)
    algo = next((a for a in config.algorithms if a.name == "rbocpd_risk_lcb"),
                config.algorithms[0])
    cfg = resolve_policy_config(config, algo, instance.n_arms, instance.n_changes,
                                instance.horizon)
    gap = instance.min_risk_gap(config.measure)
    change = instance.min_change_gap()
    if not np.isfinite(change):
        change = config.environment.gap
    if not (np.isfinite(gap) and gap > 0):
        raise ValueError("instance has no positive risk gap; bounds are undefined")
    inputs = BoundInputs(horizon=instance.horizon, n_arms=instance.n_arms,
                         n_changes=instance.n_changes, lipschitz=cfg.lipschitz,
                         sigma=cfg.sigma, min_gap=gap, min_change=change,
                         beta=cfg.beta, delta=cfg.delta)
    print(f"# A={inputs.n_arms} T={inputs.horizon} K_T={inputs.n_changes} "
          f"L={inputs.lipschitz:g} sigma={inputs.sigma:g} min_gap={gap:.6g} "
          f"min_change={change:.6g} beta={inputs.beta:.6g} delta={inputs.delta:g}")
    rows = bound_table(inputs)
    width = max(len(r[0]) for r in rows)
    print(f"{'bound':<{width}}  {'value':>14}  note")
    for name, value, note in rows:
        print(f"{name:<{width}}  {value:>14.6g}  {note}")
    return 0


def cmd_gen_env(args) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        instance = generate_instance(args.arms, args.horizon, args.changes, args.gap,
                                     min_seg=args.min_seg, rng=rng,
                                     global_switch=args.global_switch)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_instance_csv(instance, out)
    return 0


COMMANDS = {"run": cmd_run, "detect": cmd_detect, "bounds": cmd_bounds,
            "gen-env": cmd_gen_env}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ConfigError, FileNotFoundError) as exc:
        msg = str(exc) if isinstance(exc, ConfigError) or "config not found" in str(exc) \
            else f"{exc.strerror or exc}: {exc.filename}"
        print(f"error: {msg}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # runtime failures: domain errors, I/O
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
