"""
Run closed-loop scenarios and write traces, metrics and mode reports.

Usage:
    python manage.py p2h_run --preset daily --controller proposed --seed 0 1 2
    python manage.py p2h_run --preset daily --compare
    python manage.py p2h_run --preset daily --seed 0 1 --enqueue
"""
from django.core.management.base import BaseCommand, CommandError

from p2h.exceptions import P2HError
from p2h.management.common import (
    add_config_arguments,
    add_scenario_arguments,
    build_jobs,
    fail,
    load_from_options,
    output_dir,
    run_jobs,
    start_logging,
    workers_from_options,
    write_comparison,
)
from p2h.services import create_scenario_run, enqueue_scenario_run, scenario_has_active_run

COMPARE_CONTROLLERS = ('proposed', 'traditional')


class Command(BaseCommand):
    help = 'Simulate one or more scenarios under the chosen controller'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_scenario_arguments(parser)
        parser.add_argument(
            '--compare',
            action='store_true',
            help='Run the proposed and traditional controllers back to back and write a comparison table',
        )
        parser.add_argument(
            '--enqueue',
            action='store_true',
            help='Record ScenarioRun rows and hand them to the Celery worker instead of simulating here',
        )

    def handle(self, *args, **options):
        if options['enqueue'] and options['compare']:
            raise CommandError('--enqueue cannot be combined with --compare', returncode=2)
        start_logging('p2h_run', options)
        try:
            plant_file = load_from_options(options)
            if options['compare']:
                controllers = COMPARE_CONTROLLERS
            else:
                controllers = (options['controller'] or plant_file.scenario.controller,)
            out = output_dir(options)
            jobs = build_jobs(options, plant_file, controllers, out_dir=out)
            if options['enqueue']:
                self.enqueue(jobs)
                return
            results = run_jobs(jobs, workers_from_options(options))
        except P2HError as exc:
            raise fail(exc)

        for result in results:
            m = result.metrics
            self.stdout.write(
                f"{result.scenario.name:>6} {result.controller:<12} seed {result.scenario.seed:<4} "
                f"flexibility {m.flexibility_mw:9.3f} MW  avg PF {m.avg_pf:.4f}  min PF {m.min_pf:.4f}  "
                f"H2 {m.production_kg:9.2f} kg  max HTO {m.max_hto:.3f}%  "
                f"MPC {m.mpc_time_mean:.2f}/{m.mpc_time_max:.2f} s  RT {1000 * m.rt_time_max:.1f} ms"
            )

        if options['compare']:
            for start in range(0, len(results), len(COMPARE_CONTROLLERS)):
                path = write_comparison(results[start:start + len(COMPARE_CONTROLLERS)], plant_file, out)
                self.stdout.write(f"Comparison written to {path}")
        self.stdout.write(self.style.SUCCESS(f"{len(results)} run(s) written to {out}"))

    def enqueue(self, jobs):
        busy = [
            job.request for job in jobs
            if scenario_has_active_run(job.request.controller, job.request.preset, job.request.seed)
        ]
        if busy:
            names = ', '.join(f"{r.preset}/{r.controller} seed {r.seed}" for r in busy)
            raise CommandError(f"Already pending or running: {names}")

        for job in jobs:
            run = create_scenario_run(
                controller=job.request.controller,
                preset=job.request.preset,
                seed=job.request.seed,
                config_path=job.config_path,
                overrides=job.overrides,
                artifact=job.artifact,
            )
            try:
                enqueue_scenario_run(run)
            except Exception as exc:
                raise CommandError(f"Could not queue ScenarioRun #{run.id}: {exc}")
            self.stdout.write(f"ScenarioRun #{run.id} queued ({run.title}), task {run.celery_task_id}")
        self.stdout.write(self.style.SUCCESS(f"{len(jobs)} run(s) queued"))
