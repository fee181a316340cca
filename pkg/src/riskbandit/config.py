"""Experiment configuration files.

The format is INI-style (``configparser``) with a fixed, typed set of keys::

    [experiment]
    replications = 60        # int >= 1
    base_seed = 2024         # int >= 0
    output_dir = results     # path, relative to the config file
    measure = cvar           # cvar | mv
    level = 0.45             # alpha for cvar, gamma for mv

    [environment]
    kind = synthetic         # synthetic | file
    arms = 5
    horizon = 40000
    changes = 6
    gap = 0.2
    min_segment = auto       # int or auto (= horizon // (4 (changes + 1)))
    global_switch = false
    seed = none              # int: one fixed instance; none: one per replication
    path = env.csv           # only for kind = file

    [defaults]               # policy settings applied to every algorithm
    bonus_scale = 0.004

    [algorithm.rbocpd_risk_lcb]   # one section per algorithm, in run order
    beta = auto

Policy keys (in ``[defaults]`` or an algorithm section): ``lipschitz``,
``sigma``, ``bonus_scale``, ``beta`` (float, ``auto`` or ``decaying``),
``n0``, ``s0``, ``delta``, ``discount`` (float or ``auto``), ``window``
(int or ``auto``), ``detector_cap`` (int or ``none``). Unknown keys are
errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from .policies import POLICIES, PolicyConfig, default_beta, default_gamma, default_tau
from .risk import RiskMeasure


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str = "synthetic"
    arms: int = 5
    horizon: int = 40000
    changes: int = 6
    gap: float = 0.2
    min_segment: Optional[int] = None
    global_switch: bool = False
    seed: Optional[int] = None
    path: Optional[Path] = None


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    overrides: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentSpec
    algorithms: List[AlgorithmSpec]
    measure: RiskMeasure = field(default_factory=lambda: RiskMeasure.cvar(0.45))
    replications: int = 60
    base_seed: int = 0
    output_dir: Optional[Path] = None
    defaults: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        for algo in self.algorithms:
            if algo.name not in POLICIES:
                raise ConfigError(f"unknown algorithm {algo.name!r}")
        env = self.environment
        if env.kind == "file" and env.path is None:
            raise ConfigError("environment kind 'file' needs a path")
        if env.kind not in ("synthetic", "file"):
            raise ConfigError(f"unknown environment kind {env.kind!r}")

    def with_overrides(self, output_dir=None, base_seed=None, replications=None):
        changes = {}
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if base_seed is not None:
            changes["base_seed"] = int(base_seed)
        if replications is not None:
            changes["replications"] = int(replications)
        return replace(self, **changes)


def _none(text: str) -> bool:
    return text.strip().lower() in ("none", "")


def _auto(text: str) -> bool:
    return text.strip().lower() == "auto"


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text: str) -> Optional[int]:
    return None if _none(text) or _auto(text) else int(text)


def _float_or(keyword: str):
    def conv(text: str):
        v = text.strip().lower()
        if v in (keyword, "auto"):
            return v
        return float(text)
    return conv


def _int_or_auto(text: str):
    return "auto" if _auto(text) else int(text)


POLICY_KEYS = {
    "lipschitz": _float_or("auto"),
    "sigma": float,
    "bonus_scale": float,
    "beta": _float_or("decaying"),
    "n0": float,
    "s0": float,
    "delta": float,
    "discount": _float_or("auto"),
    "window": _int_or_auto,
    "detector_cap": _opt_int,
}

EXPERIMENT_KEYS = {
    "replications": int,
    "base_seed": int,
    "output_dir": str,
    "measure": str,
    "level": float,
}

ENVIRONMENT_KEYS = {
    "kind": str,
    "arms": int,
    "horizon": int,
    "changes": int,
    "gap": float,
    "min_segment": _opt_int,
    "global_switch": _bool,
    "seed": _opt_int,
    "path": str,
}


def _section(parser, name: str, schema: Dict[str, Any]) -> Dict[str, Any]:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        if key not in schema:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        try:
            out[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {key}: {exc}") from None
    return out


def parse_config(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       default_section="__unused__")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    base_dir = base_dir or Path(".")
    known = {"experiment", "environment", "defaults"}
    for sec in parser.sections():
        if sec not in known and not sec.startswith("algorithm."):
            raise ConfigError(f"unknown section [{sec}]")

    exp = _section(parser, "experiment", EXPERIMENT_KEYS)
    env = _section(parser, "environment", ENVIRONMENT_KEYS)
    defaults = _section(parser, "defaults", POLICY_KEYS)

    kind = exp.get("measure", "cvar").lower()
    level = exp.get("level", 0.45 if kind == "cvar" else 1.0)
    try:
        measure = RiskMeasure(kind, level)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if "path" in env:
        env["path"] = base_dir / env["path"]
    environment = EnvironmentSpec(**env)

    algorithms = [AlgorithmSpec(sec.split(".", 1)[1], _section(parser, sec, POLICY_KEYS))
                  for sec in parser.sections() if sec.startswith("algorithm.")]
    out_dir = exp.get("output_dir")
    return ExperimentConfig(
        environment=environment,
        algorithms=algorithms,
        measure=measure,
        replications=exp.get("replications", 60),
        base_seed=exp.get("base_seed", 0),
        output_dir=(base_dir / out_dir) if out_dir else None,
        defaults=defaults,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


DETECTING = ("rbocpd_risk_lcb", "glr_risk_lcb")


def resolve_policy_config(config: ExperimentConfig, algo: AlgorithmSpec,
                          n_arms: int, n_changes: int, horizon: int) -> PolicyConfig:
    """Turn the ``auto`` settings into numbers for a given instance shape.

    ``beta = auto`` means the fixed rate ``sqrt(A K_T / T)`` for the
    detector-equipped policies and 0 for the others.
    """
    settings = {**config.defaults, **algo.overrides}
    kwargs: Dict[str, Any] = {"measure": config.measure}
    for key, value in settings.items():
        if key == "beta":
            if value == "decaying":
                kwargs["beta_mode"] = "decaying"
            elif value == "auto":
                kwargs["beta"] = (default_beta(n_arms, n_changes, horizon)
                                  if algo.name in DETECTING else 0.0)
            else:
                kwargs["beta"] = value
        elif key == "discount":
            kwargs["discount"] = default_gamma(n_changes, horizon) if value == "auto" else value
        elif key == "window":
            kwargs["window"] = default_tau(n_changes, horizon) if value == "auto" else value
        elif key == "lipschitz":
            if value != "auto":
                kwargs["lipschitz"] = value
        else:
            kwargs[key] = value
    if "beta" not in settings:
        kwargs["beta"] = (default_beta(n_arms, n_changes, horizon)
                          if algo.name in DETECTING else 0.0)
    if algo.name == "discounted_risk_lcb" and "discount" not in settings:
        kwargs["discount"] = default_gamma(n_changes, horizon)
    if algo.name == "sliding_window_risk_lcb" and "window" not in settings:
        kwargs["window"] = default_tau(n_changes, horizon)
    try:
        return PolicyConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[algorithm.{algo.name}] {exc}") from None
