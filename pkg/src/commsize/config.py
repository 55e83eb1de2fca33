"""Experiment config files.

A run config is a YAML (or JSON) mapping of ``ModelConfig`` fields::

    family: combined
    m: 2
    p_k: 0.1
    seed: 7

A sweep config nests the run config under ``base`` and adds ``axes``
(field name -> list of values) and ``replicates``::

    base: {family: "null", p_l: 0.56}
    axes:
      p_e: [0.01, 0.05, 0.1, 0.2]
      p_j: [0.01, 0.05, 0.1, 0.2]
    replicates: 1

Keys may use dashes or underscores. ``model``, ``agents`` and
``communities`` are accepted for ``family``, ``n_agents`` and
``n_communities``. Note that YAML reads a bare ``null`` as a missing
value, so quote it or rely on ``family`` defaulting to the null model.
"""

from __future__ import annotations

import dataclasses
from typing import Any

import yaml

from .engine import ModelConfig, SweepGrid

ALIASES = {"model": "family", "agents": "n_agents", "communities": "n_communities"}
FIELDS = {f.name for f in dataclasses.fields(ModelConfig)}


class ConfigError(ValueError):
    pass


def load_mapping(path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return data


def normalize(mapping: dict[str, Any]) -> dict[str, Any]:
    """Canonical ``ModelConfig`` field names; unknown keys are an error."""
    out = {}
    for key, value in mapping.items():
        name = key.replace("-", "_")
        name = ALIASES.get(name, name)
        if name not in FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if name == "family" and value is None:
            value = "null"
        out[name] = value
    return out


def model_config(mapping: dict[str, Any]) -> ModelConfig:
    try:
        return ModelConfig(**normalize(mapping))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def sweep_grid(mapping: dict[str, Any], overrides: dict[str, Any] | None = None) -> SweepGrid:
    base = {**normalize(mapping.get("base", {})), **(overrides or {})}
    axes = normalize(mapping.get("axes", {}))
    try:
        return SweepGrid(
            base=ModelConfig(**base),
            axes={k: list(v) for k, v in axes.items()},
            replicates=int(mapping.get("replicates", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
