"""Print the calibration anchors of the configured plant."""
import json

from django.core.management.base import BaseCommand

from p2h.config import config_hash
from p2h.exceptions import P2HError
from p2h.harness.characterize import calibration_report
from p2h.management.common import add_config_arguments, fail, load_from_options, output_dir, start_logging


class Command(BaseCommand):
    help = 'Report P/Q ranges, the PF valley, the HTO crossing time and the phase-form check'

    def add_arguments(self, parser):
        add_config_arguments(parser)

    def handle(self, *args, **options):
        start_logging('p2h_calibrate', options)
        try:
            plant_file = load_from_options(options)
            report = calibration_report(plant_file.plant_config())
        except P2HError as exc:
            raise fail(exc)
        report["config_hash"] = config_hash(plant_file)
        path = output_dir(options) / 'calibration.json'
        path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding='utf-8')
        self.stdout.write(json.dumps(report, indent=2, sort_keys=True))
        if not report["phase_form"]["consistent"]:
            self.stdout.write(self.style.WARNING("Linear phase form disagrees with the cos φ chain"))
