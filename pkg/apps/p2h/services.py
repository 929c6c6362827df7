import logging
from pathlib import Path
from typing import Any, Optional

from django.db import close_old_connections
from django.utils import timezone

from p2h.config import config_hash, get_output_config, load_plant_config
from p2h.harness.modes import classify_modes
from p2h.harness.runner import RunRequest, resolve_surrogates, run_scenario, write_run_outputs
from .models import ScenarioRun


logger = logging.getLogger(__name__)


def build_scenario_run_title(run: ScenarioRun, prefix: Optional[str] = None) -> str:
    base = f"{run.preset}/{run.controller} seed {run.seed} run #{run.id}"
    return f"{prefix} {base}" if prefix else base


def create_scenario_run(
    *,
    controller: str = "proposed",
    preset: str = "daily",
    seed: int = 0,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    artifact: Optional[str] = None,
    title_prefix: Optional[str] = None,
) -> ScenarioRun:
    plant_file = load_plant_config(config_path, overrides)
    run = ScenarioRun.objects.create(
        controller=controller,
        preset=preset,
        seed=seed,
        status="PENDING",
        input_data={"config_path": config_path, "overrides": overrides or {}, "artifact": artifact},
        config_hash=config_hash(plant_file),
        detail="Queued for execution.",
    )
    run.title = build_scenario_run_title(run, prefix=title_prefix)
    run.save(update_fields=["title"])
    return run


def _record_progress(run: ScenarioRun, done: int, total: int) -> None:
    run.progress = {"hours_done": done, "hours_total": total}
    close_old_connections()
    run.save(update_fields=["progress"])


def execute_scenario_run(run: ScenarioRun, run_logger: Optional[logging.Logger] = None) -> ScenarioRun:
    """Simulate the requested scenario in-process and store its scores on the run."""
    run_logger = run_logger or logger
    input_data = run.input_data or {}
    plant_file = load_plant_config(input_data.get("config_path"), input_data.get("overrides"))
    out_dir = Path(get_output_config().output_dir) / f"scenariorun_{run.id}"

    surrogates = None
    if run.controller == "proposed":
        surrogates = resolve_surrogates(plant_file, input_data.get("artifact"))
    request = RunRequest(controller=run.controller, preset=run.preset, seed=run.seed, progress=False)
    result = run_scenario(plant_file, request, surrogates, on_hour=lambda done, total: _record_progress(run, done, total))
    write_run_outputs(result, plant_file, out_dir)

    run.metrics = result.metrics.to_dict()
    run.mode = classify_modes(result.trace, plant_file.plant_config()).to_dict()
    run.output_dir = str(out_dir)
    run.detail = (
        f"Flexibility {result.metrics.flexibility_mw:.3f} MW, average PF {result.metrics.avg_pf:.4f}, "
        f"production {result.metrics.production_kg:.2f} kg."
    )
    run_logger.info("ScenarioRun #%s: %s", run.id, run.detail)
    return run


def enqueue_scenario_run(run: ScenarioRun) -> ScenarioRun:
    from .tasks import run_scenario_task

    try:
        celery_result = run_scenario_task.delay(scenario_run_id=run.id)
        run.celery_task_id = celery_result.id
        run.save(update_fields=["celery_task_id"])
        return run
    except Exception as exc:
        run.status = "FAILURE"
        run.detail = f"Failed to start: {exc}"
        run.finished_at = timezone.now()
        run.save(update_fields=["status", "detail", "finished_at"])
        raise


def scenario_has_active_run(controller: str, preset: str, seed: int) -> bool:
    return ScenarioRun.objects.filter(
        controller=controller, preset=preset, seed=seed, status__in=["PENDING", "RUNNING"]
    ).exists()
