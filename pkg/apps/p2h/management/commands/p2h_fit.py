"""
Fit the piecewise tables and the PF polynomial and write the surrogate artifact.

Usage:
    python manage.py p2h_fit [--config plant.yaml] [--artifact path] [--seed 7]
"""
from pathlib import Path

import pandas as pd
from django.core.management.base import BaseCommand

from p2h.config import config_hash
from p2h.exceptions import P2HError
from p2h.fitting.artifact import build_surrogates, dump_surrogates
from p2h.harness.export import write_table
from p2h.harness.runner import default_artifact_path
from p2h.management.common import add_config_arguments, fail, load_from_options, output_dir, start_logging


class Command(BaseCommand):
    help = 'Build the surrogate artifact used by the hour-ahead controller'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument('--artifact', default=None, help='Artifact path (default: $P2H_OUTPUT_DIR/surrogates_<n_stacks>.json)')
        parser.add_argument('--seed', type=int, default=None, help='Sampling seed (default: fitting.seed)')

    def handle(self, *args, **options):
        start_logging('p2h_fit', options)
        try:
            plant_file = load_from_options(options)
            fitting = plant_file.fitting
            seed = fitting.seed if options['seed'] is None else options['seed']
            digest = config_hash(plant_file)
            surrogates = build_surrogates(
                plant_file.plant_config(),
                n_i=fitting.n_i,
                n_t=fitting.n_t,
                pf_order=fitting.pf_order,
                training_samples=fitting.training_samples,
                validation_samples=fitting.validation_samples,
                seed=seed,
                config_hash=digest,
            )
            out = output_dir(options)
            artifact = Path(options['artifact'] or fitting.artifact or default_artifact_path(plant_file))
            dump_surrogates(surrogates, artifact)
            errors = pd.DataFrame(
                [{"order": order, "max_error": error} for order, error in sorted(surrogates.pf_errors.items())]
            )
            write_table(errors, out / 'pf_fit_errors.csv', digest, seed)
        except P2HError as exc:
            raise fail(exc)

        self.stdout.write("PF polynomial max validation error per order:")
        for order, error in sorted(surrogates.pf_errors.items()):
            marker = '  <- used' if order == fitting.pf_order else ''
            self.stdout.write(f"  order {order}: {100 * error:.3f}%{marker}")
        self.stdout.write(self.style.SUCCESS(f"Artifact written to {artifact} (config {digest}, seed {seed})"))
