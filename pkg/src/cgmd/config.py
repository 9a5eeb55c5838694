"""Experiment configuration: a versioned JSON document validated against a
schema, with defaults filled in.

A minimal config only names what differs from the defaults (the 1024-atom
Lennard-Jones reflection setup)::

    {"version": 1, "reduction": {"kind": "extended", "krylov_depth": 10}}
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .errors import ConfigError

__all__ = ["SCHEMA_VERSION", "SCHEMA", "DEFAULTS", "ExperimentConfig", "load_config"]

SCHEMA_VERSION = 1

_number = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_index_list = {"type": "array", "items": {"type": "integer", "minimum": 0}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "potential": {"enum": ["lennard_jones", "harmonic"]},
                "spring_constant": _pos,
                "rest_length": _pos,
                "n_atoms": {"type": "integer", "minimum": 3},
                "spacing": _pos,
                "clamped": {"oneOf": [{"const": "ends"}, _index_list]},
                "interaction_range": {"type": "integer", "minimum": 1},
            },
        },
        "basis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["hybrid", "nodes", "identity"]},
                "coarse_mesh_size": {"type": "integer", "minimum": 1},
                "atomistic_start": {"type": ["integer", "null"], "minimum": 0},
                "nodes": _index_list,
            },
        },
        "reduction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["full", "conventional", "direct", "extended"]},
                "linear": {"type": "boolean"},
                "depth": {"enum": [1, 2]},
                "krylov_depth": {"type": "integer", "minimum": 0},
                "n_coarse_enriched": {"type": "integer", "minimum": 0},
                "n_atomistic_enriched": {"type": "integer", "minimum": 0},
                "enriched_nodes": {"oneOf": [{"type": "null"}, _index_list]},
                "fd_step": _pos,
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["wave_packet", "gaussian", "explicit", "random"]},
                "center": _number,
                "width": _pos,
                "amplitude": _number,
                "modes": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"first": _pos, "step": _number,
                                   "count": {"type": "integer", "minimum": 1}},
                },
                "dispersion": {"enum": ["model", "unit"]},
                "u0": {"type": "array", "items": _number},
                "v0": {"type": "array", "items": _number},
                "scale": _number,
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _pos,
                "t_final": _pos,
                "record_every": {"type": "integer", "minimum": 1},
            },
        },
        "report": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final": {"oneOf": [{"const": "auto"}, _pos]},
                "snapshots": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "split_atom": {"type": ["integer", "null"], "minimum": 0},
            },
        },
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max": _pos,
                "dt": _pos,
                "nodes_before": {"type": "integer", "minimum": 0},
                "nodes_after": {"type": "integer", "minimum": 0},
            },
        },
        "stability": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "direct_depth": {"enum": [1, 2]},
                "krylov_depth": {"type": "integer", "minimum": 1},
            },
        },
    },
}

DEFAULTS = {
    "version": SCHEMA_VERSION,
    "name": "experiment",
    "model": {
        "potential": "lennard_jones",
        "spring_constant": 1.0,
        "rest_length": 1.0,
        "n_atoms": 1024,
        "spacing": 1.0,
        "clamped": "ends",
        "interaction_range": 1,
    },
    "basis": {
        "kind": "hybrid",
        "coarse_mesh_size": 8,
        "atomistic_start": 512,
        "nodes": [],
    },
    "reduction": {
        "kind": "conventional",
        "linear": False,
        "depth": 1,
        "krylov_depth": 0,
        "n_coarse_enriched": 20,
        "n_atomistic_enriched": 5,
        "enriched_nodes": None,
        "fd_step": 1e-5,
    },
    "initial": {
        "kind": "wave_packet",
        "center": 640.0,
        "width": 20.0,
        "amplitude": 0.00025,
        "modes": {"first": 0.5, "step": 0.02, "count": 21},
        "dispersion": "model",
        "u0": [],
        "v0": [],
        "scale": 1e-3,
    },
    "integrator": {"dt": 0.01, "t_final": 80.0, "record_every": 10},
    "report": {"t_final": "auto", "snapshots": [20.0, 40.0, 60.0, 80.0], "split_atom": None},
    "kernel": {"t_max": 50.0, "dt": 0.1, "nodes_before": 8, "nodes_after": 24},
    "stability": {"direct_depth": 1, "krylov_depth": 1},
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated config with every default resolved.

    Sections are plain dicts; use :meth:`to_dict` to serialize.
    """

    name: str
    model: dict
    basis: dict
    reduction: dict
    initial: dict
    integrator: dict
    report: dict
    kernel: dict
    stability: dict

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "model": copy.deepcopy(self.model),
            "basis": copy.deepcopy(self.basis),
            "reduction": copy.deepcopy(self.reduction),
            "initial": copy.deepcopy(self.initial),
            "integrator": copy.deepcopy(self.integrator),
            "report": copy.deepcopy(self.report),
            "kernel": copy.deepcopy(self.kernel),
            "stability": copy.deepcopy(self.stability),
        }

    def replace(self, **sections) -> "ExperimentConfig":
        """New config with the given sections merged over this one."""
        return load_config(_merge(self.to_dict(), sections))


def _check_ranges(cfg: dict):
    n = cfg["model"]["n_atoms"]
    clamped = cfg["model"]["clamped"]
    if clamped != "ends" and any(i >= n for i in clamped):
        raise ConfigError("model.clamped: atom index out of range")
    if cfg["model"]["interaction_range"] >= n:
        raise ConfigError("model.interaction_range must be < n_atoms")
    basis = cfg["basis"]
    start = basis["atomistic_start"]
    if basis["kind"] == "hybrid":
        if start is None or start >= n:
            raise ConfigError("basis.atomistic_start must be an atom index")
        if start % basis["coarse_mesh_size"]:
            raise ConfigError("basis.coarse_mesh_size must divide atomistic_start")
    elif basis["kind"] == "nodes":
        nodes = basis["nodes"]
        if not nodes or min(nodes) != 0 or max(nodes) != n - 1:
            raise ConfigError("basis.nodes must include atoms 0 and n_atoms - 1")
        if start is not None and start not in nodes:
            raise ConfigError("basis.atomistic_start must be one of basis.nodes")
    split = cfg["report"]["split_atom"]
    if split is not None and split >= n:
        raise ConfigError("report.split_atom out of range")
    init = cfg["initial"]
    if init["kind"] == "explicit":
        if len(init["u0"]) != n or len(init["v0"]) != n:
            raise ConfigError("initial.u0 and initial.v0 need one entry per atom")
    if init["kind"] == "wave_packet":
        modes = init["modes"]
        last = modes["first"] + modes["step"] * (modes["count"] - 1)
        if not (0 < modes["first"] < 3.141592653589793 and 0 < last < 3.141592653589793):
            raise ConfigError("initial.modes: wavenumbers must lie in (0, pi)")
    if cfg["report"]["t_final"] != "auto" and cfg["report"]["t_final"] > cfg["integrator"]["t_final"] + 1e-12:
        raise ConfigError("report.t_final exceeds integrator.t_final")


def load_config(source) -> ExperimentConfig:
    """Validate a config and fill in defaults.

    Parameters
    ----------
    source : dict, str or Path
        The config itself or a path to a JSON file.

    Raises
    ------
    ConfigError
        On unreadable JSON, schema violations or out-of-range indices.
    """
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {source}: {exc}") from exc
    else:
        raw = source
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    _check_ranges(cfg)
    return ExperimentConfig(**{k: cfg[k] for k in
                               ("name", "model", "basis", "reduction", "initial",
                                "integrator", "report", "kernel", "stability")})
