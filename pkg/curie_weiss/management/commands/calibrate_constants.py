import json
from dataclasses import asdict
from pathlib import Path

from django.core.management.base import CommandError

from curie_weiss import __version__
from curie_weiss.estimators import CALIBRATION_N_VALUES, calibrate_constants
from curie_weiss.experiments import ExperimentReport, jsonable
from curie_weiss.management.commands._base import CurieWeissCommand, positive_int


class Command(CurieWeissCommand):
    help = "Derives the regime interval constants from exact moments over a population sweep."

    requires_config = False
    FILE_NAME = "calibrate_constants.json"
    DEFAULT_OUT = "reports"

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--alpha",
            type=float,
            default=0.5,
            help="Observed fraction K/N used for the sweep (default: 0.5)",
        )
        parser.add_argument(
            "--n-max",
            type=positive_int,
            default=CALIBRATION_N_VALUES[-1],
            help=f"Largest population size (default: {CALIBRATION_N_VALUES[-1]})",
        )
        parser.add_argument(
            "--step",
            type=positive_int,
            default=CALIBRATION_N_VALUES[1] - CALIBRATION_N_VALUES[0],
            help="Population grid step (default: %(default)s)",
        )

    def run(self, **options) -> None:
        if not 0.0 < options["alpha"] <= 1.0:
            raise CommandError(f"--alpha must lie in (0, 1], got {options['alpha']}", returncode=1)
        n_values = tuple(range(options["step"], options["n_max"] + 1, options["step"]))
        result = calibrate_constants(n_values=n_values, alpha=options["alpha"])

        output_dir = Path(options["out"] or self.DEFAULT_OUT)
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / self.FILE_NAME
        payload = {"experiment": "calibrate_constants", "version": __version__, **result.to_dict()}
        path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")

        for name, value in asdict(result.constants).items():
            self.stdout.write(f"{name} = {value:.6g}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {path}"))

        if options["record"]:
            report = ExperimentReport("calibrate_constants", summary=result.to_dict())
            self.record_run(
                "calibrate_constants",
                {"alpha": options["alpha"], "n_values": list(n_values)},
                options["seed"] or 0,
                report,
                output_dir,
            )
