"""
Proposed versus traditional controller on one scenario, plus the two-stack
allocation map at the hottest scheduled temperatures.

Usage:
    python manage.py p2h_compare --preset daily --seed 0
"""
from django.core.management.base import BaseCommand

from p2h.config import config_hash
from p2h.exceptions import P2HError
from p2h.harness.allocation_map import allocation_map_two_stack
from p2h.harness.export import write_table
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


class Command(BaseCommand):
    help = 'Compare the proposed and traditional controllers and tabulate the optimal two-stack split'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_scenario_arguments(parser)
        parser.add_argument('--map-power', type=float, nargs='*', default=[1.2e6, 1.5e6],
                            help='Bus powers (W) for the two-stack allocation map')
        parser.add_argument('--map-temperatures', type=float, nargs=2, default=[80.0, 80.0],
                            help='Stack temperatures (°C) for the allocation map')

    def handle(self, *args, **options):
        start_logging('p2h_compare', options)
        try:
            plant_file = load_from_options(options)
            out = output_dir(options)
            jobs = build_jobs(options, plant_file, ('proposed', 'traditional'), out_dir=out)
            results = run_jobs(jobs, workers_from_options(options))
            for start in range(0, len(results), 2):
                pair = results[start:start + 2]
                path = write_comparison(pair, plant_file, out)
                proposed, traditional = pair
                self.stdout.write(f"{proposed.scenario.name} seed {proposed.scenario.seed}: {path}")
                for label, attr, unit in (('flexibility', 'flexibility_mw', 'MW'), ('avg PF', 'avg_pf', ''),
                                          ('production', 'production_kg', 'kg')):
                    a = getattr(proposed.metrics, attr)
                    b = getattr(traditional.metrics, attr)
                    self.stdout.write(f"  {label:<12} proposed {a:10.4f} {unit:<3} traditional {b:10.4f} {unit}")

            config = plant_file.plant_config()
            temperatures = tuple(options['map_temperatures'])
            digest = config_hash(plant_file)
            for p_total in options['map_power']:
                mapped = allocation_map_two_stack(p_total, temperatures, config)
                name = f"allocation_{p_total / 1e6:.2f}MW_{temperatures[0]:.0f}_{temperatures[1]:.0f}C.csv"
                write_table(mapped.grid, out / name, digest, p_total_w=p_total)
                if mapped.feasible:
                    self.stdout.write(
                        f"  {p_total / 1e6:.2f} MW at {temperatures} °C: optimum I = "
                        f"({mapped.currents[0]:.0f}, {mapped.currents[1]:.0f}) A, PF {mapped.pf:.4f}"
                    )
                else:
                    self.stdout.write(self.style.WARNING(f"  {p_total / 1e6:.2f} MW: no feasible split"))
        except P2HError as exc:
            raise fail(exc)
        self.stdout.write(self.style.SUCCESS(f"Comparison written to {out}"))
