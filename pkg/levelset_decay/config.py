"""Run configurations: command, parameters, output path and format.

Parameters come from an optional JSON file (local path or http(s) URL) and
command-line flags; flags win. The merged parameters are checked against the
command's JSON schema, and defaults from the schema are filled in.
"""
import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import jsonschema  # type: ignore
from jsonschema.exceptions import best_match  # type: ignore
from requests import exceptions  # type: ignore

from .errors import ConfigError, UsageError
from .utilities import fetch_and_parse_file

logger = logging.getLogger(__name__)

GROWTH_KINDS = ["identity", "loglinear", "power", "ln2-power", "square"]

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}
_growth = {
    "oneOf": [
        {"type": "string", "enum": GROWTH_KINDS},
        {
            "type": "object",
            "properties": {
                "kind": {"type": "string", "enum": GROWTH_KINDS},
                "p": {"type": "number", "minimum": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ],
    "default": "identity",
}

_lemma_properties = {
    "variant": {"type": "string"},
    "c": _positive,
    "alpha": _positive,
    "beta": _positive,
    "theta": {"type": "number", "minimum": 0, "default": 0.0},
    "k0": _number,
    "phi0": {"type": "number", "minimum": 0},
    "growth": _growth,
    "tau_hint": {"type": ["number", "null"], "default": None},
    "theta_tilde": {"type": ["number", "null"], "default": None},
    "eps0": {"type": ["number", "null"], "default": None},
    "permissive": {"type": "boolean", "default": False},
}
_lemma_required = ["variant", "c", "alpha", "beta", "k0", "phi0"]

_source = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": ["zero", "constant", "radial"]},
        "value": {"type": "number"},
        "m_target": _positive,
        "center": {"type": "array", "items": {"type": "number"}},
        "cap": _positive,
    },
    "required": ["kind"],
    "additionalProperties": False,
    "default": {"kind": "zero"},
}

_pde_properties = {
    "n": {"type": "integer", "minimum": 3, "default": 3},
    "resolution": {"type": "integer", "minimum": 9, "default": 33},
    "a_low": {"type": "number", "exclusiveMinimum": 0, "default": 1.0},
    "a_high": {"type": "number", "exclusiveMinimum": 0},
    "theta_deg": {"type": "number", "minimum": 0, "default": 0.0},
    "averaging": {"type": "string", "enum": ["arithmetic", "harmonic"], "default": "arithmetic"},
    "source": _source,
    "picard_tol": {"type": "number", "exclusiveMinimum": 0, "default": 1e-8},
    "linear_tol": {"type": "number", "exclusiveMinimum": 0, "default": 1e-10},
    "max_picard": {"type": "integer", "minimum": 1, "default": 200},
    "omega": {"type": "number", "exclusiveMinimum": 0, "maximum": 1, "default": 0.7},
}

SCHEMAS: Dict[str, dict] = {
    "gcheck": {
        "type": "object",
        "properties": {
            "growth": _growth,
            "t_max": {"type": "number", "exclusiveMinimum": 0, "default": 1e3},
            "sample_count": {"type": "integer", "minimum": 3, "default": 10_000},
            "tol": {"type": "number", "minimum": 0, "default": 1e-12},
        },
    },
    "bound": {
        "type": "object",
        "properties": _lemma_properties,
        "required": _lemma_required,
    },
    "envelope": {
        "type": "object",
        "properties": {
            **_lemma_properties,
            "k_max": {"type": ["number", "null"], "default": None},
            "n_geometric": {"type": "integer", "minimum": 16, "default": 64},
            "slack": {"type": "number", "minimum": 0, "default": 0.05},
            "sweep": {"type": "array", "items": {"type": "object"}},
        },
        "required": _lemma_required,
    },
    "equivalence": {
        "type": "object",
        "properties": {
            "c_tilde": _positive,
            "alpha": _positive,
            "beta": _positive,
            "k0": _positive,
            "phi0": {"type": "number", "minimum": 0},
            "growth": _growth,
            "c": {"type": ["number", "null"], "default": None},
            "n_pairs": {"type": "integer", "minimum": 1, "default": 10_000},
            "seed": {"type": "integer", "default": 0},
            "per_octave": {"type": "integer", "minimum": 1, "default": 8},
            "octaves": {"type": "integer", "minimum": 1, "default": 12},
            "permissive": {"type": "boolean", "default": False},
        },
        "required": ["c_tilde", "alpha", "beta", "k0", "phi0"],
    },
    "counterexample": {
        "type": "object",
        "properties": {
            "witness": {"type": "string", "enum": ["beta1", "beta-gt-1"]},
            "alpha": {"type": "number", "exclusiveMinimum": 0, "default": 1.0},
            "refine": {"type": "boolean", "default": False},
            "k_count": {"type": "integer", "minimum": 1, "default": 200},
        },
        "required": ["witness"],
    },
    "pde-solve": {"type": "object", "properties": _pde_properties},
    "pde-analyze": {
        "type": "object",
        "properties": {**_pde_properties, "solution": {"type": "string"}},
    },
}

FORMATS: Dict[str, List[str]] = {
    "gcheck": ["json", "text"],
    "bound": ["json", "text"],
    "envelope": ["csv", "json"],
    "equivalence": ["json", "text"],
    "counterexample": ["text", "json"],
    "pde-solve": ["json", "binary"],
    "pde-analyze": ["json", "csv"],
}

# sweep items are lemma parameter sets on top of the shared envelope options
SWEEP_ITEM_SCHEMA = {
    "type": "object",
    "properties": dict(SCHEMAS["envelope"]["properties"]),
    "required": _lemma_required,
}
SWEEP_ITEM_SCHEMA["properties"].pop("sweep")


@dataclass
class RunConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "json"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "output_path": self.output_path,
            "format": self.format,
        }


def schema_error_message(e: jsonschema.exceptions.ValidationError, prefix: Optional[List[Any]] = None) -> str:
    path = list(prefix or []) + list(e.absolute_path)
    if path:
        return f"{e.message}. Error is in {' -> '.join([str(i) for i in path])}"
    return f"{e.message} of the root of the config"


def apply_defaults(params: Dict[str, Any], schema: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(params)
    for key, prop in schema.get("properties", {}).items():
        if key not in out and "default" in prop:
            out[key] = copy.deepcopy(prop["default"])
    return out


def validate_params(params: Dict[str, Any], schema: Mapping[str, Any], prefix: Optional[List[Any]] = None) -> Dict[str, Any]:
    validator_cls = jsonschema.validators.validator_for(schema)
    error = best_match(validator_cls(schema).iter_errors(params))
    if error is not None:
        raise ConfigError(schema_error_message(error, prefix))
    return apply_defaults(params, schema)


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        data = fetch_and_parse_file(path)
    except (OSError, ValueError, exceptions.RequestException) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def parse_config(
    command: str,
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    output_path: Optional[str] = None,
    fmt: Optional[str] = None,
    sweep_path: Optional[str] = None,
) -> RunConfig:
    """Build a validated RunConfig; flag overrides set to None are ignored."""
    if command not in SCHEMAS:
        raise UsageError(f"unknown command '{command}'")
    params: Dict[str, Any] = {}
    if config_path:
        data = load_config_file(config_path)
        if "params" in data:
            params.update(data["params"])
        else:
            params.update({k: v for k, v in data.items() if k not in ("output_path", "format")})
        output_path = output_path or data.get("output_path")
        fmt = fmt or data.get("format")
    params.update({k: v for k, v in (overrides or {}).items() if v is not None})

    if sweep_path:
        if command != "envelope":
            raise UsageError("--sweep is only available for the envelope command")
        try:
            sweep = fetch_and_parse_file(sweep_path)
        except (OSError, ValueError, exceptions.RequestException) as e:
            raise ConfigError(f"cannot read sweep {sweep_path}: {e}") from e
        if not isinstance(sweep, list) or not sweep:
            raise ConfigError("a sweep file must hold a non-empty JSON list of parameter sets")
        params["sweep"] = sweep

    fmt = fmt or FORMATS[command][0]
    if fmt not in FORMATS[command]:
        raise UsageError(f"format '{fmt}' is not available for {command}; use one of {FORMATS[command]}")
    if fmt == "binary" and not output_path:
        raise UsageError("the binary format needs --output")

    if "sweep" in params:
        base = {k: v for k, v in params.items() if k != "sweep"}
        items = []
        for i, item in enumerate(params["sweep"]):
            if not isinstance(item, dict):
                raise ConfigError(f"sweep entry {i} must be an object")
            items.append(validate_params({**base, **item}, SWEEP_ITEM_SCHEMA, ["sweep", i]))
        params = {"sweep": items}
    else:
        params = validate_params(params, SCHEMAS[command])
    logger.debug("config for %s: %s", command, params)
    return RunConfig(command, params, output_path, fmt)
