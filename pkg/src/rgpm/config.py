"""Experiment files (JSON).

Every physics-facing number must be given explicitly; only plumbing keys
(output directory, parallelism, checkpoint schedule, evaluation resolution,
jitter) have defaults.  Unknown keys are rejected.  Example::

    {
      "scenario": "cubic",
      "kernel": {"sigma_k": 10.0, "length_scale": 3.0,
                 "points_per_dim": [21], "input_bounds": [[-1.0, 1.0]]},
      "noise_variance": 0.01,
      "steps": 1000,
      "monotonicity": [{"dim": 0, "sign": -1, "bound": 0.0, "r_ic": 1e-8}],
      "variants": [{"name": "S0", "constrained": false},
                   {"name": "S3", "constrained": true, "max_updates": 2,
                    "delta_b": 0.1, "delta_u": 0.1}],
      "runs": 500,
      "seed_base": 0
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .kernel import KernelConfig
from .sim import CHECKPOINTS, HIDDEN_FUNCTIONS, MonotonicitySpec, ScenarioConfig, VariantSpec

_TOP_REQUIRED = {"scenario", "kernel", "noise_variance", "steps", "monotonicity", "variants",
                 "runs", "seed_base"}
_TOP_OPTIONAL = {"checkpoints", "eval_points", "training_slice", "output_dir", "parallel"}
_KERNEL_REQUIRED = {"sigma_k", "length_scale", "points_per_dim", "input_bounds"}
_KERNEL_OPTIONAL = {"jitter"}
_MONO_REQUIRED = {"dim", "sign", "bound", "r_ic"}
_VARIANT_CONSTRAINED = {"name", "constrained", "max_updates", "delta_b", "delta_u"}
_VARIANT_OPTIONAL = {"activation"}


@dataclass(frozen=True)
class Experiment:
    scenario: ScenarioConfig
    variants: tuple[VariantSpec, ...]
    output_dir: str = "out"
    parallel: int = 1
    source: dict | None = None

    def variant(self, name: str) -> VariantSpec:
        for v in self.variants:
            if v.name == name:
                return v
        raise ConfigError(f"variant {name!r} not in config; have {[v.name for v in self.variants]}")


def _check_keys(obj, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - required - optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r}")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"{where}: missing required key {missing[0]!r}")


def _number(obj: dict, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(obj: dict, key: str, where: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _parse_variant(obj, i: int) -> VariantSpec:
    where = f"variants[{i}]"
    if not isinstance(obj, dict) or "constrained" not in obj:
        raise ConfigError(f"{where}: missing required key 'constrained'")
    if obj["constrained"] is False:
        _check_keys(obj, {"name", "constrained"}, set(), where)
        v = VariantSpec(str(obj["name"]), constrained=False)
    elif obj["constrained"] is True:
        _check_keys(obj, _VARIANT_CONSTRAINED, _VARIANT_OPTIONAL, where)
        mu = obj["max_updates"]
        if mu == "unlimited":
            mu = None
        elif isinstance(mu, bool) or not isinstance(mu, int):
            raise ConfigError(f"{where}.max_updates: expected an integer or \"unlimited\", got {mu!r}")
        v = VariantSpec(str(obj["name"]), constrained=True, max_updates=mu,
                        delta_b=_number(obj, "delta_b", where), delta_u=_number(obj, "delta_u", where),
                        activation=obj.get("activation", "nominal"))
    else:
        raise ConfigError(f"{where}.constrained: expected true or false")
    v.check_named()
    return v


def parse_experiment(data: dict) -> Experiment:
    _check_keys(data, _TOP_REQUIRED, _TOP_OPTIONAL, "config")
    if data["scenario"] not in HIDDEN_FUNCTIONS:
        raise ConfigError(f"config.scenario: unknown scenario {data['scenario']!r}")
    k = data["kernel"]
    _check_keys(k, _KERNEL_REQUIRED, _KERNEL_OPTIONAL, "kernel")
    try:
        kernel = KernelConfig(
            sigma_k=_number(k, "sigma_k", "kernel"),
            length_scale=_number(k, "length_scale", "kernel"),
            points_per_dim=tuple(k["points_per_dim"]),
            input_bounds=tuple(tuple(b) for b in k["input_bounds"]),
            jitter=_number(k, "jitter", "kernel") if "jitter" in k else None,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"kernel: {exc}") from exc

    mono = []
    if not isinstance(data["monotonicity"], list):
        raise ConfigError("config.monotonicity: expected a list")
    for i, m in enumerate(data["monotonicity"]):
        where = f"monotonicity[{i}]"
        _check_keys(m, _MONO_REQUIRED, set(), where)
        mono.append(MonotonicitySpec(dim=_integer(m, "dim", where), sign=_integer(m, "sign", where),
                                     bound=_number(m, "bound", where), r_ic=_number(m, "r_ic", where)))

    if not isinstance(data["variants"], list) or not data["variants"]:
        raise ConfigError("config.variants: expected a nonempty list")
    variants = tuple(_parse_variant(v, i) for i, v in enumerate(data["variants"]))
    names = [v.name for v in variants]
    if len(set(names)) != len(names):
        raise ConfigError("config.variants: duplicate variant name")

    extra = {}
    if "checkpoints" in data:
        extra["checkpoints"] = tuple(data["checkpoints"])
    if "eval_points" in data:
        extra["eval_points"] = _integer(data, "eval_points", "config")
    if "training_slice" in data:
        extra["training_slice"] = tuple(data["training_slice"])
    scenario = ScenarioConfig(
        hidden=data["scenario"], kernel=kernel,
        noise_variance=_number(data, "noise_variance", "config"),
        monotonicity=tuple(mono),
        steps=_integer(data, "steps", "config"),
        n_runs=_integer(data, "runs", "config"),
        seed_base=_integer(data, "seed_base", "config"),
        **({"checkpoints": CHECKPOINTS} | extra),
    )
    parallel = data.get("parallel", 1)
    if isinstance(parallel, bool) or not isinstance(parallel, int) or parallel < 1:
        raise ConfigError("config.parallel: expected a positive integer")
    return Experiment(scenario=scenario, variants=variants,
                      output_dir=str(data.get("output_dir", "out")), parallel=parallel, source=data)


def load_experiment(path) -> Experiment:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_experiment(data)
