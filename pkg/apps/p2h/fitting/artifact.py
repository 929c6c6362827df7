"""
Surrogate bundle consumed by the hour-ahead controller, and its JSON artifact.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from jsonschema import ValidationError as SchemaValidationError
from jsonschema import validate

from p2h.exceptions import ConfigError
from p2h.fitting.grid import PiecewiseGrid, build_grid
from p2h.fitting.pf_polynomial import PFSurrogate, fit_pf_polynomial
from p2h.fitting.tables import CellTable, ProductionTable, fit_heat, fit_power, fit_production, fit_reactive
from p2h.physics.plant import PlantConfig

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_vector = {"type": "array", "items": {"type": "number"}}
_cell_table = {
    "type": "object",
    "required": ["current_coef", "temperature_coef", "constant", "max_error"],
    "properties": {
        "current_coef": _matrix,
        "temperature_coef": _matrix,
        "constant": _matrix,
        "max_error": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

SURROGATE_SCHEMA = {
    "type": "object",
    "required": ["version", "n_stacks", "seed", "config_hash", "grid", "production", "power",
                 "reactive", "heat", "pf", "pf_errors"],
    "properties": {
        "version": {"const": ARTIFACT_VERSION},
        "n_stacks": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "config_hash": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["current_breaks", "temperature_breaks"],
            "properties": {
                "current_breaks": {**_vector, "minItems": 3},
                "temperature_breaks": {**_vector, "minItems": 3},
            },
        },
        "production": {
            "type": "object",
            "required": ["slopes", "intercepts", "max_error"],
            "properties": {"slopes": _vector, "intercepts": _vector, "max_error": {"type": "number"}},
        },
        "power": _cell_table,
        "reactive": _cell_table,
        "heat": _cell_table,
        "pf": {
            "type": "object",
            "required": ["order", "intercept", "coefficients", "current_scale", "temperature_scale",
                         "max_error", "train_rmse"],
            "properties": {
                "order": {"type": "integer", "minimum": 1, "maximum": 4},
                "intercept": {"type": "number"},
                "coefficients": _vector,
                "current_scale": {"type": "number", "exclusiveMinimum": 0},
                "temperature_scale": {"type": "number", "exclusiveMinimum": 0},
                "max_error": {"type": "number", "minimum": 0},
                "train_rmse": {"type": "number", "minimum": 0},
            },
        },
        "pf_errors": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


@dataclass(frozen=True)
class Surrogates:
    grid: PiecewiseGrid
    production: ProductionTable
    power: CellTable
    reactive: CellTable
    heat: CellTable
    pf: PFSurrogate
    pf_errors: Dict[int, float] = field(default_factory=dict)
    n_stacks: int = 1
    seed: int = 0
    config_hash: str = ""


def build_surrogates(config: PlantConfig, n_i: int = 10, n_t: int = 5, pf_order: int = 3,
                     training_samples: int = 4000, validation_samples: int = 10000, seed: int = 7,
                     config_hash: str = "", error_orders=(1, 2, 3, 4)) -> Surrogates:
    grid = build_grid(config.stack, n_i, n_t)
    pf_errors = {}
    chosen = None
    for order in sorted(set(error_orders) | {pf_order}):
        surrogate = fit_pf_polynomial(config, order, training_samples, validation_samples, seed)
        pf_errors[order] = surrogate.max_error
        if order == pf_order:
            chosen = surrogate
    return Surrogates(
        grid=grid,
        production=fit_production(grid),
        power=fit_power(grid, config.stack, config.rectifier),
        reactive=fit_reactive(grid, config.stack, config.rectifier),
        heat=fit_heat(grid, config.stack),
        pf=chosen,
        pf_errors=pf_errors,
        n_stacks=config.n_stacks,
        seed=seed,
        config_hash=config_hash,
    )


def _table_dict(table: CellTable) -> dict:
    return {
        "current_coef": np.asarray(table.current_coef).tolist(),
        "temperature_coef": np.asarray(table.temperature_coef).tolist(),
        "constant": np.asarray(table.constant).tolist(),
        "max_error": float(table.max_error),
    }


def surrogates_to_dict(surrogates: Surrogates) -> dict:
    pf = surrogates.pf
    return {
        "version": ARTIFACT_VERSION,
        "n_stacks": surrogates.n_stacks,
        "seed": surrogates.seed,
        "config_hash": surrogates.config_hash,
        "grid": {
            "current_breaks": list(surrogates.grid.current_breaks),
            "temperature_breaks": list(surrogates.grid.temperature_breaks),
        },
        "production": {
            "slopes": np.asarray(surrogates.production.slopes).tolist(),
            "intercepts": np.asarray(surrogates.production.intercepts).tolist(),
            "max_error": float(surrogates.production.max_error),
        },
        "power": _table_dict(surrogates.power),
        "reactive": _table_dict(surrogates.reactive),
        "heat": _table_dict(surrogates.heat),
        "pf": {
            "order": pf.order,
            "intercept": pf.intercept,
            "coefficients": list(pf.coefficients),
            "current_scale": pf.current_scale,
            "temperature_scale": pf.temperature_scale,
            "max_error": pf.max_error,
            "train_rmse": pf.train_rmse,
        },
        "pf_errors": {str(k): float(v) for k, v in sorted(surrogates.pf_errors.items())},
    }


def surrogates_from_dict(data: dict) -> Surrogates:
    try:
        validate(instance=data, schema=SURROGATE_SCHEMA)
    except SchemaValidationError as exc:
        raise ConfigError(f"Surrogate artifact does not match schema: {exc.message}") from exc

    def table(name):
        raw = data[name]
        return CellTable(
            name=name,
            current_coef=np.asarray(raw["current_coef"], dtype=float),
            temperature_coef=np.asarray(raw["temperature_coef"], dtype=float),
            constant=np.asarray(raw["constant"], dtype=float),
            max_error=raw["max_error"],
        )

    grid = PiecewiseGrid(
        current_breaks=tuple(data["grid"]["current_breaks"]),
        temperature_breaks=tuple(data["grid"]["temperature_breaks"]),
    )
    pf = data["pf"]
    return Surrogates(
        grid=grid,
        production=ProductionTable(
            slopes=np.asarray(data["production"]["slopes"], dtype=float),
            intercepts=np.asarray(data["production"]["intercepts"], dtype=float),
            max_error=data["production"]["max_error"],
        ),
        power=table("power"),
        reactive=table("reactive"),
        heat=table("heat"),
        pf=PFSurrogate(
            order=pf["order"],
            n_stacks=data["n_stacks"],
            intercept=pf["intercept"],
            coefficients=tuple(pf["coefficients"]),
            current_scale=pf["current_scale"],
            temperature_scale=pf["temperature_scale"],
            max_error=pf["max_error"],
            train_rmse=pf["train_rmse"],
        ),
        pf_errors={int(k): v for k, v in data["pf_errors"].items()},
        n_stacks=data["n_stacks"],
        seed=data["seed"],
        config_hash=data["config_hash"],
    )


def dump_surrogates(surrogates: Surrogates, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(surrogates_to_dict(surrogates), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info("Surrogate artifact written to %s", path)
    return path


def load_surrogates(path, expected_stacks: Optional[int] = None) -> Surrogates:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"Surrogate artifact not found: {path} (run p2h_fit first)") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Surrogate artifact {path} is not valid JSON: {exc}") from exc
    surrogates = surrogates_from_dict(data)
    if expected_stacks is not None and surrogates.n_stacks != expected_stacks:
        raise ConfigError(
            f"Surrogate artifact {path} was fit for {surrogates.n_stacks} stacks, plant has {expected_stacks}"
        )
    return surrogates
