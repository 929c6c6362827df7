"""
Write the single-stack characteristic surfaces and the two-stack PF map.

Usage:
    python manage.py p2h_characterize [--config plant.yaml] [--out dir]
"""
from django.core.management.base import BaseCommand

from p2h.config import config_hash
from p2h.exceptions import P2HError
from p2h.harness.characterize import characteristic_surfaces, two_stack_pf_map
from p2h.harness.export import write_table
from p2h.management.common import add_config_arguments, fail, load_from_options, output_dir, start_logging


class Command(BaseCommand):
    help = 'Tabulate P, Q, PF and efficiency over the (I, T) box plus the two-stack PF map'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument('--currents', type=int, default=100, help='Current grid points')
        parser.add_argument('--temperatures', type=int, default=11, help='Temperature grid points')
        parser.add_argument('--map-points', type=int, default=60, help='Grid points per axis of the two-stack map')

    def handle(self, *args, **options):
        start_logging('p2h_characterize', options)
        try:
            plant_file = load_from_options(options)
            config = plant_file.plant_config()
            digest = config_hash(plant_file)
            out = output_dir(options) / 'characterize'
            surfaces = characteristic_surfaces(config, options['currents'], options['temperatures'])
            grid = f"{options['currents']}x{options['temperatures']}"
            for name, frame in surfaces.items():
                path = write_table(frame, out / f"surface_{name}.csv", digest, grid=grid, quantity=name)
                self.stdout.write(f"  {name:<10} {len(frame):>6} rows -> {path}")
            two_stack = two_stack_pf_map(config, options['map_points'])
            path = write_table(two_stack, out / "two_stack_pf.csv", digest, grid=f"{options['map_points']}^2")
            self.stdout.write(f"  {'two_stack':<10} {len(two_stack):>6} rows -> {path}")
        except P2HError as exc:
            raise fail(exc)
        self.stdout.write(self.style.SUCCESS(f"Characterization written (config {digest})"))
