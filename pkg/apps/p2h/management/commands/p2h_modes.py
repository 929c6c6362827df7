"""
Classify the operating mode of the plant under each constant-load preset.

Usage:
    python manage.py p2h_modes --set plant.n_stacks=10 --workers 5
"""
import pandas as pd
from django.core.management.base import BaseCommand

from p2h.config import config_hash
from p2h.exceptions import P2HError
from p2h.harness.export import write_table
from p2h.harness.modes import PRESET_MODES, classify_modes
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
)


class Command(BaseCommand):
    help = 'Run the 10/20/30/50/100% presets with the proposed controller and label each operating mode'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_scenario_arguments(parser)
        parser.add_argument('--presets', nargs='+', default=list(PRESET_MODES), help='Constant-load presets')

    def handle(self, *args, **options):
        start_logging('p2h_modes', options)
        try:
            plant_file = load_from_options(options)
            config = plant_file.plant_config()
            out = output_dir(options)
            jobs = build_jobs(options, plant_file, ('proposed',), presets=options['presets'], out_dir=out)
            results = run_jobs(jobs, workers_from_options(options))
        except P2HError as exc:
            raise fail(exc)

        rows = []
        for result in results:
            report = classify_modes(result.trace, config)
            expected = PRESET_MODES.get(result.scenario.name)
            rows.append({
                "preset": result.scenario.name,
                "seed": result.scenario.seed,
                "label": report.label.value,
                "expected": expected.value if expected else "",
                "switching": report.switching.value,
                "split": report.split.value,
                "hto_binding": report.hto_binding,
                "pf_binding": report.pf_binding,
                "flags_match": report.flags_match,
                "max_hto": result.metrics.max_hto,
                "flexibility_mw": result.metrics.flexibility_mw,
            })
            style = self.style.SUCCESS if expected is None or expected == report.label else self.style.WARNING
            self.stdout.write(style(f"{result.scenario.name:>4}%: {report.label.value}"))
        path = write_table(pd.DataFrame(rows), out / 'modes.csv', config_hash(plant_file), n_stacks=config.n_stacks)
        self.stdout.write(self.style.SUCCESS(f"Mode table written to {path}"))
