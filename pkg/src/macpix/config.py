"""Experiment documents: schema validation, defaults, canned recipes."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from jsonschema import Draft202012Validator

KINDS = ("device-sweep", "pixel-cycle", "fidelity-map", "array-mac", "montecarlo", "conv-demo", "area")

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}
_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_obj = {"type": "object"}
_mode = {"enum": ["ideal", "physical"]}

PARAM_SCHEMAS: dict[str, dict] = {
    "device-sweep": {
        "properties": {
            "pva_min": _nonneg, "pva_max": _pos, "pva_steps": {"type": "integer", "minimum": 2},
            "t_fe_list": {"type": "array", "minItems": 1, "items": _pos}, "fefet": _obj,
        },
    },
    "pixel-cycle": {
        "properties": {
            "pva": _nonneg, "i_pd": _nonneg, "t_int": _nonneg, "n_cycles": _count,
            "reprogram_cycles": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "mode": _mode, "pixel": _obj,
        },
    },
    "fidelity-map": {"properties": {"grid": _obj, "pixel": _obj}},
    "array-mac": {
        "properties": {
            "products": _matrix, "pva_matrix": _matrix, "dvph_matrix": _matrix,
            "weights": _matrix, "inputs": _matrix, "mode": _mode, "physical_check": {"type": "boolean"},
            "reference": {"type": "boolean"}, "t_int": _pos, "pixel": _obj, "grid": _obj,
        },
    },
    "montecarlo": {
        "properties": {
            "t_fe_nominal": _pos, "t_fe_pct": _nonneg, "dvth_fe": _nonneg, "dvth_xp": _nonneg,
            "sigma_interpretation": {"enum": ["one_sigma", "three_sigma"]},
            "n_trials": {"type": "integer", "minimum": 2}, "pva": _nonneg, "dvph": _nonneg,
            "full_solve": {"type": "boolean"}, "workers": _count, "bins": _count, "pixel": _obj,
        },
    },
    "conv-demo": {
        "properties": {
            "image_size": {"type": "array", "items": _count, "minItems": 2, "maxItems": 2},
            "kernel_size": {"type": "array", "items": _count, "minItems": 2, "maxItems": 2},
            "stride": _count, "image": _matrix, "kernel": _matrix,
            "modes": {"type": "array", "items": _mode, "minItems": 1},
            "differential": {"type": "boolean"}, "workers": _count, "pixel": _obj, "grid": _obj,
        },
    },
    "area": {
        "properties": {k: _nonneg for k in (
            "gate_pitch", "diffusion_pitch", "penalty_fefet", "penalty_xp", "penalty_xr")}
        | {"pixel_area": _pos},
    },
}

DEFAULTS: dict[str, dict] = {
    "device-sweep": {"pva_min": 0.0, "pva_max": 4.0, "pva_steps": 81, "t_fe_list": [2.0, 2.5, 3.0, 3.5]},
    "pixel-cycle": {"pva": 2.15, "i_pd": 3.5e-12, "t_int": 1e-3, "n_cycles": 3,
                    "reprogram_cycles": [0], "mode": "physical"},
    "fidelity-map": {"grid": {}},
    "array-mac": {"mode": "ideal", "physical_check": False, "reference": False, "t_int": 1e-3},
    "montecarlo": {"t_fe_nominal": 2.0, "t_fe_pct": 0.09, "dvth_fe": 0.150, "dvth_xp": 0.150,
                   "sigma_interpretation": "three_sigma", "n_trials": 10000, "pva": 2.15,
                   "dvph": 0.7, "full_solve": False, "workers": 1, "bins": 40},
    "conv-demo": {"image_size": [8, 8], "kernel_size": [2, 2], "stride": 1,
                  "modes": ["ideal", "physical"], "differential": True, "workers": 1},
    "area": {},
}

TOP_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "parameters": {"type": "object"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "svg": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class ExperimentConfig:
    kind: str
    parameters: dict[str, Any]
    output_dir: str
    seed: int = 0
    svg: bool = False
    warnings: list[str] = field(default_factory=list)


def validate_config(doc) -> tuple[ExperimentConfig | None, list[str], list[str]]:
    """Return ``(config, errors, warnings)``; ``config`` is None when errors is non-empty."""
    errors: list[str] = []
    warns: list[str] = []
    for e in sorted(Draft202012Validator(TOP_SCHEMA).iter_errors(doc), key=lambda e: e.json_path):
        errors.append(f"{e.json_path}: {e.message}")
    if not isinstance(doc, dict):
        return None, errors or ["$: document must be an object"], warns
    for k in sorted(set(doc) - set(TOP_SCHEMA["properties"])):
        warns.append(f"$.{k}: unknown field ignored")
    kind = doc.get("kind")
    params = doc.get("parameters", {})
    if kind in PARAM_SCHEMAS and isinstance(params, dict):
        schema = {"type": "object", **PARAM_SCHEMAS[kind]}
        for e in sorted(Draft202012Validator(schema).iter_errors(params), key=lambda e: e.json_path):
            errors.append(f"$.parameters{e.json_path[1:]}: {e.message}")
        for k in sorted(set(params) - set(schema["properties"])):
            warns.append(f"$.parameters.{k}: unknown field ignored")
        if kind == "array-mac":
            have = [k for k in ("products", "pva_matrix", "weights") if k in params]
            if len(have) != 1:
                errors.append("$.parameters: exactly one of products, pva_matrix, weights is required")
            if "pva_matrix" in params and "dvph_matrix" not in params:
                errors.append("$.parameters.dvph_matrix: required with pva_matrix")
            if "weights" in params and "inputs" not in params:
                errors.append("$.parameters.inputs: required with weights")
    if errors:
        return None, errors, warns
    merged = copy.deepcopy(DEFAULTS[kind])
    merged.update({k: v for k, v in params.items() if k in PARAM_SCHEMAS[kind]["properties"]})
    cfg = ExperimentConfig(kind, merged, doc.get("output_dir", f"out/{kind}"),
                           int(doc.get("seed", 0)), bool(doc.get("svg", False)), warns)
    return cfg, [], warns


TABLE1_PRODUCTS = [
    [0.44, 0.40, 0.29, 0.62],
    [0.21, 0.63, 1.32, 0.44],
    [0.97, 0.19, 0.60, 0.28],
    [0.69, 0.88, 0.95, 0.13],
]

RECIPES: dict[str, dict] = {
    "fig2d": {"kind": "device-sweep", "parameters": {}, "output_dir": "out/fig2d"},
    "fig2c": {"kind": "pixel-cycle", "parameters": {}, "output_dir": "out/fig2c"},
    "fig3": {"kind": "fidelity-map", "parameters": {}, "output_dir": "out/fig3"},
    "fig4c": {"kind": "array-mac", "output_dir": "out/fig4c",
              "parameters": {"products": TABLE1_PRODUCTS, "mode": "ideal", "physical_check": True}},
    "table2": {"kind": "area", "parameters": {}, "output_dir": "out/table2"},
    "fig5": {"kind": "montecarlo", "parameters": {}, "output_dir": "out/fig5", "seed": 20240601},
    "conv-demo": {"kind": "conv-demo", "parameters": {}, "output_dir": "out/conv-demo", "seed": 7},
}
ALIASES = {"table1": "fig4c", "table3": "fig5", "table4": "fig5", "table3-4": "fig5"}


def recipe(name: str) -> dict:
    name = ALIASES.get(name, name)
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    return copy.deepcopy(RECIPES[name])
