"""Run configuration: YAML with environment-variable interpolation for secrets."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .gateway import ModelEndpoint
from .types import ProblemRecord

_ENV_REF = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _interpolate(value):
    if isinstance(value, str):
        return _ENV_REF.sub(lambda m: os.environ.get(m.group(1), ""), value)
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    return value


@dataclass
class RunConfig:
    endpoints: dict = field(default_factory=dict)
    problem_model: str = "problem-model"
    candidate_models: list = field(default_factory=lambda: ["candidate-model"])
    teacher_model: str = "teacher-model"
    variants_per_seed: int = 20
    implementations_per_problem: int = 4
    thread_counts: list = field(default_factory=lambda: [4, 16, 64, 128])
    pairing_budget: int = 6
    min_think_tokens: int = 200
    val_fraction: float = 0.05
    tsan_workers: int = 4
    caliper_workers: int = 1

    def endpoint(self, name: str) -> ModelEndpoint:
        if name not in self.endpoints:
            # a bare name is still usable with mock transports
            return ModelEndpoint(name=name)
        return self.endpoints[name]


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as f:
            raw = _interpolate(yaml.safe_load(f) or {})
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc

    endpoints = {}
    for item in raw.get("endpoints", []):
        try:
            ep = ModelEndpoint(**item)
        except TypeError as exc:
            raise ConfigError(f"bad endpoint entry {item!r}: {exc}") from exc
        if ep.name in endpoints:
            raise ConfigError(f"duplicate endpoint name {ep.name!r}")
        endpoints[ep.name] = ep

    known = {f.name for f in RunConfig.__dataclass_fields__.values()}
    kwargs = {k: v for k, v in raw.items() if k in known and k != "endpoints"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(endpoints=endpoints, **kwargs)


def load_seeds(path=None) -> list:
    """Seed problems as ProblemRecords with variant_index 0."""
    if path is not None:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    else:
        raw = yaml.safe_load(
            resources.files("ompworld").joinpath("assets/seeds.yaml").read_text(encoding="utf-8")
        )
    seeds = []
    try:
        for domain, entries in raw["domains"].items():
            for entry in entries:
                seeds.append(
                    ProblemRecord.create(
                        domain=domain, seed_id=entry["seed_id"],
                        variant_index=0, statement=entry["statement"],
                    )
                )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed seeds file: {exc}") from exc
    return seeds
