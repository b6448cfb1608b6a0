import sys
from typing import Optional

from django.core.management.base import BaseCommand, CommandError

from curie_weiss import __version__
from curie_weiss.config import OUTPUT_FORMATS, ExperimentConfig, ExperimentKind, load_config
from curie_weiss.exceptions import AuditViolation, CurieWeissError, MonotonicityError
from curie_weiss.experiments import ExperimentReport, jsonable, run_experiment, write_report
from curie_weiss.models import ExperimentRun

USAGE_EXIT = 1
FAILURE_EXIT = 2


def positive_int(value):
    """
    Validates that the value is a positive integer.
    """
    try:
        ivalue = int(value)
        if ivalue <= 0:
            raise ValueError
    except ValueError:
        raise ValueError("Value must be a positive integer")
    return ivalue


def u64(value):
    """
    Validates that the value is an unsigned 64-bit integer.
    """
    try:
        ivalue = int(value)
        if not 0 <= ivalue < 2 ** 64:
            raise ValueError
    except ValueError:
        raise ValueError("Value must be an unsigned 64-bit integer")
    return ivalue


class CurieWeissCommand(BaseCommand):
    """
    Shared flags and exit codes: 0 on success, 1 on usage or configuration
    errors, 2 when a check or an audit fails.
    """

    kind: Optional[ExperimentKind] = None
    requires_config = True

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        # argparse exits with 2 on bad arguments, which is reserved for failed checks
        def exit_as_usage_error(status=0, message=None):
            if message:
                sys.stderr.write(message)
            sys.exit(USAGE_EXIT if status else 0)

        parser.exit = exit_as_usage_error
        return parser

    def add_arguments(self, parser):
        """
        Adds command-line arguments to the parser.
        """
        parser.add_argument(
            "--config",
            required=self.requires_config,
            help="Path to the experiment configuration file",
        )
        parser.add_argument("--seed", type=u64, help="Master seed (overrides the configuration)")
        parser.add_argument("--out", help="Output directory (overrides the configuration)")
        parser.add_argument("--threads", type=positive_int, help="Worker threads for replications")
        parser.add_argument("--format", choices=OUTPUT_FORMATS, help="Report format")
        parser.add_argument(
            "--record",
            action="store_true",
            help="Store the run in the experiment ledger",
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options) -> None:
        """
        The main entry point for the command.
        """
        try:
            self.run(**options)
        except (AuditViolation, MonotonicityError) as e:
            self.stdout.write(self.style.ERROR(str(e)))
            raise CommandError(str(e), returncode=FAILURE_EXIT) from e
        except CurieWeissError as e:
            raise CommandError(str(e), returncode=USAGE_EXIT) from e

    def run(self, **options) -> None:
        raise NotImplementedError

    def load(self, options) -> ExperimentConfig:
        cfg = load_config(options["config"], self.kind)
        return cfg.with_overrides(
            seed=options["seed"],
            output_dir=options["out"],
            threads=options["threads"],
            output_format=options["format"],
        )

    def record_run(self, kind: str, cfg_dict, seed, report: ExperimentReport, output_dir) -> ExperimentRun:
        run = ExperimentRun.objects.create(
            kind=kind,
            seed=str(seed),
            version=__version__,
            config=jsonable(cfg_dict),
            summary=jsonable(report.summary),
            checks=jsonable(report.checks),
            passed=report.passed,
            output_dir=str(output_dir),
        )
        self.stdout.write(f"Recorded run #{run.pk}")
        return run

    def finish(self, report: ExperimentReport, cfg: ExperimentConfig, options) -> None:
        for path in write_report(report, cfg):
            self.stdout.write(f"Wrote {path}")
        if options["record"]:
            self.record_run(cfg.kind.value, cfg.to_dict(), cfg.seed, report, cfg.output_dir)

        for name, ok in sorted(report.checks.items()):
            style = self.style.SUCCESS if ok else self.style.ERROR
            self.stdout.write(style(f"{'PASS' if ok else 'FAIL'} {name}"))

        if not report.passed:
            raise CommandError(
                f"{len(report.failed_checks)} check(s) failed: {', '.join(report.failed_checks)}",
                returncode=FAILURE_EXIT,
            )
        self.stdout.write(self.style.SUCCESS(f"{report.name}: all {len(report.checks)} checks passed"))


class ExperimentCommand(CurieWeissCommand):
    """Runs the experiment named by ``kind`` and writes its report."""

    def run(self, **options) -> None:
        cfg = self.load(options)
        self.stdout.write(f"Running {cfg.kind.value} (seed {cfg.seed}, {cfg.threads} thread(s))")
        report = run_experiment(cfg)
        self.finish(report, cfg, options)
