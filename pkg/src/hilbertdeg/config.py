"""Experiment configs: JSON or YAML, validated against a strict schema."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import yaml

from .brouwer import EngineConfig
from .catalog import build, potential_map
from .errors import ConfigError
from .hilbert import BlockRotation
from .maps import LocalMap
from .regions import Region

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}

SHAPE = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["ball"],
            "properties": {"ball": {
                "type": "object", "additionalProperties": False, "required": ["center", "radius"],
                "properties": {"center": _VEC, "radius": {"type": "number", "exclusiveMinimum": 0}},
            }},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["box"],
            "properties": {"box": {
                "type": "object", "additionalProperties": False, "required": ["lo", "hi"],
                "properties": {"lo": _VEC, "hi": _VEC},
            }},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["annulus"],
            "properties": {"annulus": {
                "type": "object", "additionalProperties": False, "required": ["center", "inner", "outer"],
                "properties": {"center": _VEC, "inner": _NUM, "outer": _NUM},
            }},
        },
    ]
}

REGION = {
    "type": "object",
    "additionalProperties": False,
    "required": ["slice_dim", "shapes"],
    "properties": {
        "slice_dim": {"type": "integer", "minimum": 1},
        "shapes": {"type": "array", "items": SHAPE, "minItems": 1},
        "tail_radius": {"type": "number", "exclusiveMinimum": 0},
        "blocks": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
    },
}

MAP = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["catalog"],
            "properties": {"catalog": {"type": "string"}, "params": {"type": "object"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["potential", "region"],
            "properties": {
                "potential": {"type": "string"},
                "region": REGION,
                "lipschitz": {"type": "number", "minimum": 0},
            },
        },
    ]
}

ENGINE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "window": {"type": "integer", "minimum": 0},
        "density": {"type": "number", "exclusiveMinimum": 0},
        "min_per_shape": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "cap": {"type": "integer", "minimum": 1},
        "max_doublings": {"type": "integer", "minimum": 0},
        "max_draws": {"type": "integer", "minimum": 1},
        "cluster_radius": {"type": "number", "exclusiveMinimum": 0},
        "det_threshold": {"type": "number", "exclusiveMinimum": 0},
        "residual_tol": {"type": "number", "exclusiveMinimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["task"],
    "properties": {
        "task": {"enum": ["deg", "stab", "otopy", "basis", "region", "demo"]},
        "map": MAP,
        "target": MAP,
        "other_region": REGION,
        "rotation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "matrix": {"type": "array", "items": _VEC},
            },
        },
        "demo": {"enum": ["annulus", "suspension"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "engine": ENGINE,
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "csv": {"type": "boolean"}},
        },
    },
}

NEEDS_MAP = {"deg", "stab", "otopy", "basis", "region"}


@dataclass
class ExperimentConfig:
    task: str
    map: Optional[dict] = None
    target: Optional[dict] = None
    other_region: Optional[dict] = None
    rotation: Optional[dict] = None
    demo: Optional[str] = None
    seed: int = 0
    engine: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def window(self) -> int:
        return int(self.engine.get("window", 5 if self.task == "stab" else 3))

    @property
    def cap(self) -> int:
        return int(self.engine.get("cap", 64))

    def engine_config(self) -> EngineConfig:
        keys = set(EngineConfig.__dataclass_fields__)
        return EngineConfig(**{k: v for k, v in self.engine.items() if k in keys})


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _branch_error(err):
    """For a failed oneOf, descend into the branch whose leading key is present."""
    inst = err.instance
    if err.validator == "oneOf" and isinstance(inst, dict):
        for i, branch in enumerate(err.validator_value):
            key = (branch.get("required") or [None])[0]
            if key in inst:
                sub = [e for e in err.context if e.relative_schema_path[0] == i]
                if sub:
                    return jsonschema.exceptions.best_match(sub)
    return jsonschema.exceptions.best_match(err.context)


def validate(data: Any) -> ExperimentConfig:
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data))
    if err is not None:
        while err.context:
            err = _branch_error(err)
        raise ConfigError(err.message, _path(err))
    cfg = ExperimentConfig(**data)
    if cfg.task in NEEDS_MAP and cfg.map is None:
        raise ConfigError("required for task " + repr(cfg.task), "map")
    if cfg.task == "region" and cfg.other_region is None:
        raise ConfigError("required for task 'region'", "other_region")
    if cfg.task == "basis" and cfg.rotation is None:
        raise ConfigError("required for task 'basis'", "rotation")
    if cfg.task == "demo" and cfg.demo is None:
        raise ConfigError("required for task 'demo'", "demo")
    return cfg


def load(path: str | Path) -> ExperimentConfig:
    return validate(read(path))


def read(path: str | Path) -> dict:
    """Raw config document; validation is left to the caller."""
    p = Path(path)
    text = p.read_text()
    try:
        data = yaml.safe_load(text) if p.suffix in (".yaml", ".yml") else json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot parse {p.name}: {err}", "<file>") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{p.name} must hold a mapping", "<root>")
    return data


def build_map(spec: dict, seed: int = 0, where: str = "map") -> LocalMap:
    if "catalog" in spec:
        try:
            return build(spec["catalog"], **spec.get("params", {}))
        except KeyError as err:
            raise ConfigError(str(err.args[0]), f"{where}.catalog") from err
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err), f"{where}.params") from err
    region = region_from(spec["region"], f"{where}.region")
    try:
        return potential_map(spec["potential"], region, spec.get("lipschitz"), seed)
    except (SyntaxError, ValueError) as err:
        raise ConfigError(str(err), f"{where}.potential") from err


def region_from(d: dict, where: str) -> Region:
    try:
        return Region.from_dict(d)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err), where) from err


def rotation_from(d: dict) -> BlockRotation:
    if "matrix" in d:
        try:
            return BlockRotation(int(d["dim"]), np.array(d["matrix"], dtype=float))
        except ValueError as err:
            raise ConfigError(str(err), "rotation.matrix") from err
    return BlockRotation.random(int(d["dim"]), np.random.default_rng(int(d.get("seed", 0))))
