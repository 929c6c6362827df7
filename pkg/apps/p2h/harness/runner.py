"""
Scenario runs assembled from a plant file.

Shared by the management commands, the background ScenarioRun job and the
acceptance tests.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

import pandas as pd

from p2h.config import PlantFile, config_hash, get_output_config
from p2h.control.mpc import MpcSettings, ProposedController
from p2h.control.realtime import RtSettings
from p2h.fitting.artifact import Surrogates, build_surrogates, load_surrogates
from p2h.harness.closed_loop import ClosedLoopResult, ProposedPolicy, run_closed_loop
from p2h.harness.export import write_metrics, write_table, write_trace
from p2h.harness.modes import classify_modes
from p2h.harness.profiles import Scenario, make_antiload_profile
from p2h.harness.traditional import TraditionalController
from p2h.milp.solvers import solver_from_section
from p2h.physics.plant import initial_state

logger = logging.getLogger(__name__)

CONTROLLERS = ("proposed", "traditional")


@dataclass(frozen=True)
class RunRequest:
    controller: str = "proposed"
    preset: Optional[str] = None
    seed: Optional[int] = None
    dump_dir: Optional[Path] = None
    progress: bool = True


def fit_surrogates(plant_file: PlantFile) -> Surrogates:
    fitting = plant_file.fitting
    return build_surrogates(
        plant_file.plant_config(),
        n_i=fitting.n_i,
        n_t=fitting.n_t,
        pf_order=fitting.pf_order,
        training_samples=fitting.training_samples,
        validation_samples=fitting.validation_samples,
        seed=fitting.seed,
        config_hash=config_hash(plant_file),
    )


def default_artifact_path(plant_file: PlantFile) -> Path:
    return Path(get_output_config().output_dir) / f"surrogates_{plant_file.plant.n_stacks}.json"


def resolve_surrogates(plant_file: PlantFile, artifact: Optional[str] = None) -> Surrogates:
    """
    Load the given or configured artifact. Without one, the default artifact
    path is tried and the surrogates are fit in memory when nothing is there.
    """
    path = artifact or plant_file.fitting.artifact
    if path:
        return load_surrogates(path, expected_stacks=plant_file.plant.n_stacks)
    fallback = default_artifact_path(plant_file)
    if fallback.exists():
        return load_surrogates(fallback, expected_stacks=plant_file.plant.n_stacks)
    logger.info("No surrogate artifact at %s; fitting in memory", fallback)
    return fit_surrogates(plant_file)


def build_scenario(plant_file: PlantFile, request: RunRequest) -> Scenario:
    scenario = plant_file.scenario
    return make_antiload_profile(
        request.preset or scenario.preset,
        plant_file.plant_config(),
        alpha=plant_file.mpc.alpha,
        seed=scenario.seed if request.seed is None else request.seed,
        controller=request.controller,
        days=scenario.days,
    )


def build_policy(plant_file: PlantFile, controller: str, surrogates: Optional[Surrogates] = None,
                 dump_dir: Optional[Path] = None):
    config = plant_file.plant_config()
    if controller == "traditional":
        return TraditionalController(config)
    if controller != "proposed":
        raise ValueError(f"Unknown controller {controller!r}; choose from {', '.join(CONTROLLERS)}")
    mpc = ProposedController(
        config,
        surrogates if surrogates is not None else resolve_surrogates(plant_file),
        solver_from_section(plant_file.solver),
        MpcSettings.from_section(plant_file.mpc),
        dump_dir=dump_dir,
    )
    return ProposedPolicy(mpc, RtSettings.from_section(plant_file.rt))


def run_scenario(plant_file: PlantFile, request: RunRequest, surrogates: Optional[Surrogates] = None,
                 on_hour: Optional[Callable[[int, int], None]] = None) -> ClosedLoopResult:
    config = plant_file.plant_config()
    scenario = build_scenario(plant_file, request)
    policy = build_policy(plant_file, request.controller, surrogates, request.dump_dir)
    settings = plant_file.scenario
    start = initial_state(config, settings.initial_temperature, settings.initial_hto, settings.initial_delta)
    logger.info("Running %s with the %s controller (seed %d)", scenario.name, request.controller, scenario.seed)
    return run_closed_loop(scenario, config, policy, start, progress=request.progress, on_hour=on_hour)


def write_run_outputs(result: ClosedLoopResult, plant_file: PlantFile, out_dir) -> Dict[str, Path]:
    """Trace, metrics, mode report and (for the MPC) the executed schedules."""
    out_dir = Path(out_dir)
    digest = config_hash(plant_file)
    stem = f"{result.scenario.name}_{result.controller}_seed{result.scenario.seed}"
    n_stacks = plant_file.plant.n_stacks
    paths = {
        "trace": write_trace(result.trace, out_dir / f"{stem}_trace.csv", n_stacks, digest, result.scenario.seed,
                             controller=result.controller, preset=result.scenario.name),
    }
    report = classify_modes(result.trace, plant_file.plant_config())
    paths["metrics"] = write_metrics(
        {result.controller: result.metrics}, out_dir / f"{stem}_metrics.json", digest, result.scenario.seed,
        preset=result.scenario.name, mode=report.to_dict(),
    )
    if result.schedules:
        frame = pd.concat([s.to_frame() for s in result.schedules], ignore_index=True)
        paths["schedules"] = write_table(frame, out_dir / f"{stem}_schedules.csv", digest, result.scenario.seed)
    return paths
