from pathlib import Path

import pytest

from curie_weiss.config import ExperimentConfig, ExperimentKind, load_config, parse_config
from curie_weiss.core import GroupSpec
from curie_weiss.estimators import IntervalConstants, Regime
from curie_weiss.exceptions import ConfigError

VALID = """
# two groups
[model]
beta = 0.5, 1.5
n_pop = 200, 200
k_obs = 100, 100

[estimators]
use = gamma, zeta

[intervals]
b1 = 0.7
d_high = 3.0

[experiment]
kind = consistency
n_obs = 100, 1000
replications = 5
seed = 42
equivalence_regime = low
strict = True

[output]
dir = reports/test
format = json
"""


class TestParseConfig:

    def test_valid_file(self):
        cfg = parse_config(VALID)
        assert cfg.kind is ExperimentKind.CONSISTENCY
        assert cfg.model[1] == GroupSpec(1.5, 200, 100)
        assert cfg.estimators == ("gamma", "zeta")
        assert cfg.b1 == 0.7
        assert cfg.b2 == 1.2
        assert cfg.constants == IntervalConstants(c_high=0.5, c_low=0.05, d_high=3.0, d_low=0.05)
        assert cfg.n_obs == (100, 1000)
        assert cfg.replications == 5
        assert cfg.seed == 42
        assert cfg.equivalence_regime is Regime.LOW
        assert cfg.strict is True
        assert cfg.output_dir == Path("reports/test")
        assert cfg.output_format == "json"

    def test_defaults(self):
        cfg = parse_config("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n", ExperimentKind.SAMPLE)
        assert cfg.kind is ExperimentKind.SAMPLE
        assert cfg.seed == 20240917
        assert cfg.ml_bracket == (-5.0, 10.0)
        assert cfg.constants == IntervalConstants.from_settings()
        assert cfg.threads == 1

    def test_command_kind_wins(self):
        assert parse_config(VALID, ExperimentKind.CLT).kind is ExperimentKind.CLT

    def test_kind_required_without_command(self):
        with pytest.raises(ConfigError, match="kind"):
            parse_config("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n")

    def test_missing_model_key(self):
        with pytest.raises(ConfigError, match="k_obs"):
            parse_config("[model]\nbeta = 0.5\nn_pop = 100\n", ExperimentKind.CLT)

    @pytest.mark.parametrize("text, line", [
        ("[model]\nbeta = 0.5\ncolour = red\n", 3),
        ("[model]\nbeta = 0.5\nbeta = 0.6\n", 3),
        ("beta = 0.5\n", 1),
        ("[model]\n[model]\n", 2),
        ("[modle]\n", 1),
        ("[model\n", 1),
        ("[model]\nbeta\n", 2),
        ("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n[experiment]\nreplications = many\n", 6),
        ("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n[experiment]\nseed = -1\n", 6),
        ("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n[output]\nformat = xml\n", 6),
        ("[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n[estimators]\nuse = gamma, delta\n", 6),
        ("[model]\nbeta = 0.5\nn_pop = 100,\nk_obs = 50\n", 3),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ConfigError) as exc_info:
            parse_config(text, ExperimentKind.CLT)
        assert exc_info.value.line == line
        assert str(exc_info.value).startswith(f"line {line}: ")

    def test_invalid_model_points_to_beta(self):
        text = "\n[model]\nbeta = 0.5, 1.5\nn_pop = 100\nk_obs = 50\n"
        with pytest.raises(ConfigError) as exc_info:
            parse_config(text, ExperimentKind.CLT)
        assert exc_info.value.line == 3

    def test_k_obs_above_population(self):
        with pytest.raises(ConfigError):
            parse_config("[model]\nbeta = 0.5\nn_pop = 10\nk_obs = 50\n", ExperimentKind.CLT)

    @pytest.mark.parametrize("section", [
        "[experiment]\nreplications = 0\n",
        "[experiment]\nn_obs = 0\n",
        "[experiment]\nlevel = 1.5\n",
        "[experiment]\nthreads = 0\n",
        "[experiment]\nml_bracket = 3, 1\n",
        "[experiment]\nk_fraction = 0\n",
    ])
    def test_value_ranges(self, section):
        text = "[model]\nbeta = 0.5\nn_pop = 100\nk_obs = 50\n" + section
        with pytest.raises(ConfigError):
            parse_config(text, ExperimentKind.CLT)


class TestExperimentConfig:

    @pytest.fixture
    def cfg(self):
        return parse_config(VALID)

    def test_overrides(self, cfg):
        changed = cfg.with_overrides(seed=7, output_dir="elsewhere", threads=4, output_format="csv")
        assert changed.seed == 7
        assert changed.output_dir == Path("elsewhere")
        assert changed.threads == 4
        assert changed.output_format == "csv"
        assert cfg.seed == 42

    def test_no_overrides(self, cfg):
        assert cfg.with_overrides() == cfg

    def test_to_dict(self, cfg):
        record = cfg.with_overrides(threads=8).to_dict()
        assert "threads" not in record
        assert record["kind"] == "consistency"
        assert record["model"][0] == {"beta": 0.5, "n_pop": 200, "k_obs": 100}
        assert record["seed"] == 42
        assert record["equivalence_regime"] == "low"
        assert record["rng"].startswith("numpy.random.PCG64DXSM")

    def test_thread_count_does_not_change_the_record(self, cfg):
        assert cfg.with_overrides(threads=8).to_dict() == cfg.to_dict()

    def test_requires_estimators(self, cfg):
        with pytest.raises(ConfigError):
            ExperimentConfig(cfg.kind, cfg.model, estimators=())


class TestLoadConfig:

    def test_reads_file(self, write_config):
        cfg = load_config(write_config(VALID))
        assert cfg.replications == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read"):
            load_config(tmp_path / "missing.ini")
