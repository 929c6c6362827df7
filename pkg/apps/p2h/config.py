import copy
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from p2h.exceptions import ConfigError
from p2h.physics.plant import PlantConfig
from p2h.physics.rectifier import DEFAULT_COMPENSATION_VAR, RectifierParams
from p2h.physics.stack import SeparatorParams, StackParams, VoltageCoefficients

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "defaults" / "plant.yaml"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VoltageSection(_Section):
    n_cells: float = Field(172.0, gt=0)
    r1: float = 0.0054
    r2: float = 0.0
    s: float = Field(6.0, ge=0)
    t1: float = 0.002
    t2: float = 0.03
    t3: float = 0.0


class StackSection(_Section):
    rated_power: float = Field(1.0e6, gt=0)
    i_max: float = Field(5000.0, gt=0)
    t_min: float = 30.0
    t_max: float = 80.0
    t_amb: float = 25.0
    u_tn: float = Field(148.0, gt=0)
    r_h: float = Field(0.004, gt=0)
    c_h: float = Field(7000.0, gt=0)
    voltage: VoltageSection = Field(default_factory=VoltageSection)
    p_cool_max: Optional[float] = Field(None, gt=0)
    startup_band: float = 60.0
    i_min_fraction: float = Field(0.13, ge=0, lt=1)


class SeparatorSection(_Section):
    p_sep: float = Field(3.0e6, gt=0)
    t_sep: float = Field(343.0, gt=0)
    v_sep: float = Field(1.0, gt=0)
    n_in: float = Field(0.75, gt=0)
    hto_max: float = Field(2.0, gt=0, lt=100)
    r_gas: float = Field(8.314, gt=0)
    faraday: float = Field(96485.0, gt=0)
    flow_scale: float = Field(47.0, gt=0)
    off_purge_rate: float = Field(1.5, ge=0)


class RectifierSection(_Section):
    turn_ratio: float = Field(104.0, gt=0)
    u1: float = Field(10465.0, gt=0)
    nu: float = Field(0.9971, gt=0, le=1)
    loss_a: float = 5.4e-4
    loss_b: float = 1.353
    loss_c: float = Field(91940.0, ge=0)
    gamma_slope: float = -0.6738
    gamma_intercept: float = 0.5065
    firing_coefficient: float = Field(4.07e-3, gt=0)
    qc: float = 0.0
    compensation_var: float = Field(DEFAULT_COMPENSATION_VAR, ge=0)
    standby_draw: bool = True


class PlantSection(_Section):
    n_stacks: int = Field(2, ge=1)
    intervals_per_hour: int = Field(4, ge=1)
    horizon: int = Field(4, ge=1)
    pf_min: float = Field(0.9, gt=0, le=1)


class FittingSection(_Section):
    n_i: int = Field(10, ge=2)
    n_t: int = Field(5, ge=2)
    pf_order: int = Field(3, ge=1, le=4)
    training_samples: int = Field(4000, ge=10)
    validation_samples: int = Field(10000, ge=10)
    seed: int = 7
    artifact: Optional[str] = None


class MpcSection(_Section):
    alpha: float = Field(0.05, ge=0, lt=1)
    pf_mode: Literal["average", "hourly", "both"] = "hourly"
    pf_margin: float = Field(0.002, ge=0, lt=0.1)
    hto_gain_point: Literal["lower", "representative"] = "lower"
    hto_margin: float = Field(0.0, ge=0)
    balance_penalty: float = Field(1e-3, gt=0)
    current_penalty: float = Field(1e-9, ge=0)
    min_down_hours: int = Field(0, ge=0)


class RtSection(_Section):
    refine_iterations: int = Field(2, ge=0)
    increase_descending: bool = True
    hto_margin: float = Field(1e-6, ge=0)
    hto_model: Literal["exact", "taylor"] = "exact"


class SolverSection(_Section):
    backend: Literal["native", "highs"] = "highs"
    feasibility_tol: float = Field(1e-7, gt=0)
    integrality_tol: float = Field(1e-6, gt=0)
    gap_tol: float = Field(1e-6, ge=0)
    max_iterations: int = Field(50000, ge=1)
    node_limit: int = Field(20000, ge=1)
    time_limit: float = Field(120.0, gt=0)


class ScenarioSection(_Section):
    preset: str = "daily"
    controller: Literal["proposed", "traditional"] = "proposed"
    seed: int = 0
    days: int = Field(1, ge=1)
    initial_temperature: float = 60.0
    initial_hto: float = Field(0.0, ge=0)
    initial_delta: int = Field(1, ge=0, le=1)


class PlantFile(_Section):
    plant: PlantSection = Field(default_factory=PlantSection)
    stack: StackSection = Field(default_factory=StackSection)
    separator: SeparatorSection = Field(default_factory=SeparatorSection)
    rectifier: RectifierSection = Field(default_factory=RectifierSection)
    fitting: FittingSection = Field(default_factory=FittingSection)
    mpc: MpcSection = Field(default_factory=MpcSection)
    rt: RtSection = Field(default_factory=RtSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)

    def stack_params(self) -> StackParams:
        data = self.stack.model_dump()
        data["voltage"] = VoltageCoefficients(**data["voltage"])
        return StackParams(**data)

    def separator_params(self) -> SeparatorParams:
        return SeparatorParams(**self.separator.model_dump())

    def rectifier_params(self) -> RectifierParams:
        data = self.rectifier.model_dump(exclude={"compensation_var", "standby_draw"})
        return RectifierParams(**data)

    def plant_config(self) -> PlantConfig:
        return PlantConfig(
            n_stacks=self.plant.n_stacks,
            stack=self.stack_params(),
            separator=self.separator_params(),
            rectifier=self.rectifier_params(),
            intervals_per_hour=self.plant.intervals_per_hour,
            horizon=self.plant.horizon,
            pf_min=self.plant.pf_min,
            compensation_var=self.rectifier.compensation_var,
            standby_draw=self.rectifier.standby_draw,
        )


def apply_overrides(data: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Set dotted keys such as ``mpc.alpha`` on a raw config mapping."""
    result = copy.deepcopy(data)
    for dotted, value in (overrides or {}).items():
        node = result
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Override {dotted!r} walks through non-mapping key {part!r}")
            node = child
        node[parts[-1]] = value
    return result


def load_plant_config(path=None, overrides: Optional[Dict[str, Any]] = None) -> PlantFile:
    config_path = Path(path) if path else DEFAULT_CONFIG_PATH
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file not found: {config_path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file {config_path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {config_path} must hold a mapping at top level")

    try:
        plant_file = PlantFile.model_validate(apply_overrides(raw, overrides))
        plant_file.plant_config()
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"Invalid configuration in {config_path}: {exc}") from exc
    return plant_file


def config_hash(plant_file: PlantFile) -> str:
    canonical = json.dumps(plant_file.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


class OutputConfig:
    """Where run outputs and logs are written"""
    def __init__(self):
        self.output_dir = Path(os.getenv("P2H_OUTPUT_DIR", "./p2h_output"))
        self.log_level = os.getenv("P2H_LOG_LEVEL", "INFO").upper()


def get_output_config() -> OutputConfig:
    return OutputConfig()


class WorkerConfig:
    """Scenario fan-out"""
    def __init__(self):
        try:
            self.workers = max(1, int(os.getenv("P2H_WORKERS", "1")))
        except ValueError:
            raise ConfigError("P2H_WORKERS must be an integer")


def get_worker_config() -> WorkerConfig:
    return WorkerConfig()


class SuiteConfig:
    def __init__(self):
        self.slow_tests = os.getenv("P2H_SLOW_TESTS", "0").lower() in ["true", "1", "yes"]


def get_suite_config() -> SuiteConfig:
    return SuiteConfig()
