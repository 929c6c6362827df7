"""Argument handling and scenario fan-out shared by the p2h_* commands."""
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
import yaml
from django.core.management.base import CommandError

from p2h.config import PlantFile, config_hash, get_output_config, get_worker_config, load_plant_config
from p2h.exceptions import P2HError, exit_code_for
from p2h.harness.closed_loop import ClosedLoopResult
from p2h.harness.export import write_table
from p2h.harness.metrics import comparison_table, hourly_pf
from p2h.harness.runner import RunRequest, resolve_surrogates, run_scenario, write_run_outputs
from p2h.logger_setup import setup_logging

logger = logging.getLogger(__name__)


def add_config_arguments(parser) -> None:
    parser.add_argument('--config', default=None, help='Plant YAML file (default: the shipped plant.yaml)')
    parser.add_argument('--out', default=None, help='Output directory (default: $P2H_OUTPUT_DIR)')
    parser.add_argument(
        '--set',
        action='append',
        default=[],
        metavar='KEY=VALUE',
        help='Dotted config override, e.g. --set plant.n_stacks=10 (repeatable)',
    )


def add_scenario_arguments(parser) -> None:
    parser.add_argument('--preset', default=None, help='daily, 10, 20, 30, 50 or 100')
    parser.add_argument('--controller', choices=['proposed', 'traditional'], default=None)
    parser.add_argument('--alpha', type=float, default=None, help='Instruction uncertainty half-width')
    parser.add_argument('--seed', type=int, nargs='+', default=None, help='One or more scenario seeds')
    parser.add_argument('--artifact', default=None, help='Surrogate artifact written by p2h_fit')
    parser.add_argument('--workers', type=int, default=None, help='Parallel scenarios (default: $P2H_WORKERS)')
    parser.add_argument('--dump-milp', action='store_true', help='Write every hourly MILP in LP format')


def parse_overrides(options: Dict[str, Any]) -> Dict[str, Any]:
    overrides = {}
    for item in options.get('set') or []:
        if '=' not in item:
            raise CommandError(f"--set expects KEY=VALUE, got {item!r}", returncode=2)
        key, raw = item.split('=', 1)
        overrides[key.strip()] = yaml.safe_load(raw)
    if options.get('alpha') is not None:
        overrides['mpc.alpha'] = options['alpha']
    return overrides


def load_from_options(options: Dict[str, Any]) -> PlantFile:
    return load_plant_config(options.get('config'), parse_overrides(options))


def output_dir(options: Dict[str, Any]) -> Path:
    out = Path(options.get('out') or get_output_config().output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def start_logging(run_name: str, options: Dict[str, Any]) -> None:
    setup_logging(run_name, output_dir(options) / 'logs', get_output_config().log_level)


def workers_from_options(options: Dict[str, Any]) -> int:
    workers = options.get('workers')
    return max(1, workers) if workers else get_worker_config().workers


def fail(exc: P2HError) -> CommandError:
    logger.error("%s", exc)
    return CommandError(str(exc), returncode=exit_code_for(exc))


@dataclass(frozen=True)
class ScenarioJob:
    config_path: Optional[str]
    overrides: Dict[str, Any]
    request: RunRequest
    artifact: Optional[str]
    out_dir: Path


def run_job(job: ScenarioJob) -> ClosedLoopResult:
    """Worker entry point; each worker loads its own configuration and surrogates."""
    plant_file = load_plant_config(job.config_path, job.overrides)
    surrogates = resolve_surrogates(plant_file, job.artifact) if job.request.controller == 'proposed' else None
    result = run_scenario(plant_file, job.request, surrogates)
    write_run_outputs(result, plant_file, job.out_dir)
    return result


def run_jobs(jobs: Sequence[ScenarioJob], workers: int) -> List[ClosedLoopResult]:
    """Results in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    results: List[Optional[ClosedLoopResult]] = [None] * len(jobs)
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        futures = {pool.submit(run_job, job): index for index, job in enumerate(jobs)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return results


def build_jobs(options: Dict[str, Any], plant_file: PlantFile, controllers: Sequence[str],
               presets: Optional[Sequence[str]] = None, out_dir: Optional[Path] = None) -> List[ScenarioJob]:
    out_dir = out_dir or output_dir(options)
    seeds = options.get('seed') or [plant_file.scenario.seed]
    presets = presets or [options.get('preset') or plant_file.scenario.preset]
    parallel = workers_from_options(options) > 1
    jobs = []
    for preset in presets:
        for seed in seeds:
            for controller in controllers:
                dump_dir = out_dir / f"milp_{preset}_{controller}_seed{seed}" if options.get('dump_milp') else None
                jobs.append(ScenarioJob(
                    config_path=options.get('config'),
                    overrides=parse_overrides(options),
                    request=RunRequest(controller=controller, preset=preset, seed=seed, dump_dir=dump_dir,
                                       progress=not parallel),
                    artifact=options.get('artifact'),
                    out_dir=out_dir,
                ))
    return jobs


def write_comparison(results: Sequence[ClosedLoopResult], plant_file: PlantFile, out_dir: Path) -> Path:
    """Side-by-side metrics plus the hourly PF of every controller for one scenario."""
    first = results[0].scenario
    digest = config_hash(plant_file)
    table = comparison_table({r.controller: r.metrics for r in results})
    table.index.name = "metric"
    pf = pd.DataFrame({f"pf_{r.controller}": hourly_pf(r.trace) for r in results})
    pf.index.name = "hour"
    stem = f"{first.name}_seed{first.seed}"
    write_table(pf.reset_index(), out_dir / f"{stem}_hourly_pf.csv", digest, first.seed)
    return write_table(table.reset_index(), out_dir / f"{stem}_comparison.csv", digest, first.seed, preset=first.name)
