from pathlib import Path

from curie_weiss.config import ExperimentKind
from curie_weiss.experiments import ExperimentReport
from curie_weiss.management.commands._base import CurieWeissCommand, positive_int, u64
from curie_weiss.sampler import SamplerConfig, sample_multigroup, write_csv


class Command(CurieWeissCommand):
    help = "Draws observations of the configured model and writes them as CSV."

    kind = ExperimentKind.SAMPLE
    FILE_NAME = "sample.csv"

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--n-obs",
            type=positive_int,
            help="Number of observations (default: first entry of the n_obs grid)",
        )
        parser.add_argument("--stream-id", type=u64, default=0, help="Substream id (default: 0)")

    def run(self, **options) -> None:
        cfg = self.load(options)
        n_obs = options["n_obs"] or cfg.n_obs[0]
        sampler = SamplerConfig(cfg.seed, options["stream_id"])

        sample = sample_multigroup(cfg.model, n_obs, sampler)
        path = write_csv(sample, Path(cfg.output_dir) / self.FILE_NAME)
        self.stdout.write(self.style.SUCCESS(f"Wrote {sample.n_obs} observations to {path}"))
        self.stdout.write(f"Sample digest: {sample.digest()}")

        if options["record"]:
            report = ExperimentReport(
                "sample",
                summary={
                    "n_obs": sample.n_obs,
                    "k_obs": list(sample.k_obs),
                    "stream_id": options["stream_id"],
                    "digest": sample.digest(),
                },
            )
            self.record_run(cfg.kind.value, cfg.to_dict(), cfg.seed, report, path)
