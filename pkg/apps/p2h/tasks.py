"""
Celery tasks for the p2h app.
Each task works on one ScenarioRun row.
"""
import logging

from celery import shared_task
from django.db import close_old_connections
from django.utils import timezone

from p2h.exceptions import P2HError
from p2h.logger_setup import get_run_logger

logger = logging.getLogger(__name__)


def initialize_run_logger(run, logger_title: str) -> logging.Logger:
    """Create the per-run log file and return a dedicated logger."""
    if not run.logs_file:
        from django.core.files.base import ContentFile

        log_filename = f"scenariorun_{run.id}.log"
        run.logs_file.save(log_filename, ContentFile(""))
        close_old_connections()
        run.save(update_fields=['logs_file'])

    run_logger = get_run_logger(run.id, run.logs_file.path)
    run_logger.info(logger_title)
    return run_logger


@shared_task(bind=True)
def run_scenario_task(self, scenario_run_id: int):
    """
    Celery task to simulate one scenario run.

    Args:
        scenario_run_id: ID of the ScenarioRun instance to track progress
    """
    from .models import ScenarioRun
    from .services import execute_scenario_run

    run = None
    try:
        close_old_connections()
        run = ScenarioRun.objects.get(id=scenario_run_id)

        run.status = 'RUNNING'
        run.started_at = timezone.now()
        run.detail = f'Simulating {run.preset} with the {run.controller} controller.'
        close_old_connections()
        run.save(update_fields=['status', 'started_at', 'detail'])

        run_logger = initialize_run_logger(run, f"ScenarioRun #{scenario_run_id}: {run.detail}")
        execute_scenario_run(run, run_logger)

        run.status = 'SUCCESS'
        run.finished_at = timezone.now()
        close_old_connections()
        run.save(update_fields=['status', 'finished_at', 'detail', 'metrics', 'mode', 'output_dir'])
        return run.metrics

    except ScenarioRun.DoesNotExist:
        logger.error("ScenarioRun #%s: ScenarioRun not found", scenario_run_id)
        raise
    except P2HError as exc:
        logger.error("ScenarioRun #%s: %s", scenario_run_id, exc)
        if run:
            run.status = 'FAILURE'
            run.detail = str(exc)
            run.finished_at = timezone.now()
            close_old_connections()
            run.save(update_fields=['status', 'detail', 'finished_at'])
        raise
    except Exception as exc:
        logger.error("ScenarioRun #%s: simulation failed - %s", scenario_run_id, exc, exc_info=True)
        if run:
            run.status = 'FAILURE'
            run.detail = f"{type(exc).__name__}: {exc}"
            run.finished_at = timezone.now()
            close_old_connections()
            run.save(update_fields=['status', 'detail', 'finished_at'])
        raise
    finally:
        try:
            if run:
                close_old_connections()
                run.refresh_from_db()
                if run.status == 'RUNNING':
                    run.status = 'FAILURE'
                    run.detail = "Task stopped unexpectedly"
                    run.finished_at = timezone.now()
                    close_old_connections()
                    run.save(update_fields=['status', 'detail', 'finished_at'])
        except Exception as exc:
            logger.error("ScenarioRun #%s: Error in finally block - %s", scenario_run_id, exc)
