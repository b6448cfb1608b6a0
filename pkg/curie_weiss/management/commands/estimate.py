from curie_weiss.config import ExperimentKind
from curie_weiss.experiments import estimate_report
from curie_weiss.management.commands._base import CurieWeissCommand
from curie_weiss.statistics import ingest_csv


class Command(CurieWeissCommand):
    help = "Estimates the couplings of every group from a sample CSV file."

    kind = ExperimentKind.ESTIMATE

    def add_command_arguments(self, parser):
        parser.add_argument("--input", required=True, help="Sample CSV file")
        parser.add_argument(
            "--zero-one",
            action="store_true",
            help="Read votes encoded as 0/1 instead of -1/+1",
        )
        parser.add_argument(
            "--with-targets",
            action="store_true",
            help="Attach targets, variances and confidence intervals from the configured couplings",
        )

    def run(self, **options) -> None:
        cfg = self.load(options)
        sample = ingest_csv(options["input"], zero_one=options["zero_one"])
        self.stdout.write(f"Read {sample.n_obs} observations of {sample.n_groups} group(s)")

        report = estimate_report(sample, cfg, with_targets=options["with_targets"])
        for row in report.rows:
            self.stdout.write(
                f"group {row['group']} {row['estimator']}: {row['value']} ({row['regime']})"
            )
        self.finish(report, cfg, options)
