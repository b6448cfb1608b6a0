import itertools

import numpy as np
import pytest

from curie_weiss.exceptions import DomainError, SampleFormatError
from curie_weiss.sampler import SampleMatrix, SamplerConfig, sample_multigroup
from curie_weiss.statistics import (
    StatisticKind,
    compute_P,
    compute_T,
    ingest_csv,
    squared_sum_totals,
)


@pytest.fixture
def small_sample():
    return SampleMatrix(np.array([[1, 1, 1, 1, -1], [1, -1, -1, -1, -1]]), (3, 2))


@pytest.fixture
def write_sample(tmp_path):
    def write(lines):
        path = tmp_path / "sample.csv"
        path.write_text("\n".join(lines) + "\n")
        return path

    return write


class TestStatistics:

    def test_squared_sum(self, small_sample):
        T = compute_T(small_sample)
        assert T.kind is StatisticKind.SQUARED_SUM
        # group 0 row sums 3 and -1, group 1 row sums 0 and -2
        assert T.values == (5.0, 2.0)
        assert T.n_obs == 2
        assert T.k_obs == (3, 2)

    def test_pair_correlation(self, small_sample):
        P = compute_P(small_sample)
        assert P.kind is StatisticKind.PAIR_CORRELATION
        assert P[0] == pytest.approx(1 / 3)
        assert P[1] == pytest.approx(0.0)

    def test_pair_correlation_equals_pairwise_mean(self, two_group_spec):
        sample = sample_multigroup(two_group_spec, 50, SamplerConfig(3))
        P = compute_P(sample)
        for index in range(sample.n_groups):
            block = sample.group(index).astype(float)
            pairs = itertools.combinations(range(block.shape[1]), 2)
            direct = np.mean([np.mean(block[:, i] * block[:, j]) for i, j in pairs])
            assert P[index] == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_pair_needs_two_voters(self):
        with pytest.raises(DomainError):
            compute_P(SampleMatrix(np.ones((2, 3)), (2, 1)))

    def test_totals_do_not_depend_on_chunking(self, settings, two_group_spec):
        sample = sample_multigroup(two_group_spec, 101, SamplerConfig(8))
        default = squared_sum_totals(sample)
        settings.CURIE_WEISS = {**settings.CURIE_WEISS, "STAT_CHUNK_ROWS": 7}
        assert squared_sum_totals(sample) == default
        assert all(isinstance(total, int) for total in default)


class TestIngestCsv:

    def test_reads_groups(self, write_sample):
        path = write_sample([
            "group,0,0,1",
            "voter_index,0,1,0",
            "0,1,-1,1",
            "1,+1,1,-1",
        ])
        sample = ingest_csv(path)
        assert sample.k_obs == (2, 1)
        np.testing.assert_array_equal(sample.values, [[1, -1, 1], [1, 1, -1]])

    def test_reads_single_header_layout(self, write_sample):
        path = write_sample([
            "0:0,0:1,1:0",
            "1,-1,1",
            "+1,1,-1",
        ])
        sample = ingest_csv(path)
        assert sample.k_obs == (2, 1)
        np.testing.assert_array_equal(sample.values, [[1, -1, 1], [1, 1, -1]])

    def test_single_header_layout_errors(self, write_sample):
        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(write_sample(["0:0,0:1,1:0", "1,-1,1", "1,2,1"]))
        assert (exc_info.value.row, exc_info.value.column) == (3, 2)

        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(write_sample(["0:0,0:2", "1,1"]))
        assert (exc_info.value.row, exc_info.value.column) == (1, 2)

        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(write_sample(["0:0,1", "1,1"]))
        assert (exc_info.value.row, exc_info.value.column) == (1, 2)

        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(write_sample(["0:0,0:1"]))
        assert exc_info.value.row == 2

    def test_zero_one_coding(self, write_sample):
        path = write_sample(["group,0,0", "voter_index,0,1", "0,1,0", "1,0,0"])
        sample = ingest_csv(path, zero_one=True)
        np.testing.assert_array_equal(sample.values, [[1, -1], [-1, -1]])

    def test_zero_one_coding_rejects_signed_entries(self, write_sample):
        path = write_sample(["group,0,0", "voter_index,0,1", "0,1,-1"])
        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(path, zero_one=True)
        assert exc_info.value.row == 3
        assert exc_info.value.column == 3

    def test_reports_row_and_column(self, write_sample):
        path = write_sample([
            "group,0,0,0",
            "voter_index,0,1,2",
            "0,1,1,1",
            "1,1,2,1",
        ])
        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(path)
        assert exc_info.value.row == 4
        assert exc_info.value.column == 3
        assert "row 4, column 3" in str(exc_info.value)

    def test_wrong_number_of_cells(self, write_sample):
        path = write_sample(["group,0,0", "voter_index,0,1", "0,1,1,1"])
        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(path)
        assert exc_info.value.row == 3

    @pytest.mark.parametrize("lines, row", [
        (["voter_index,0,1", "group,0,0", "0,1,1"], 1),
        (["group,0,0", "voters,0,1", "0,1,1"], 2),
        (["group,1,1", "voter_index,0,1", "0,1,1"], 1),
        (["group,0,0", "voter_index,0,2", "0,1,1"], 2),
        (["group,0,1,0", "voter_index,0,0,1", "0,1,1,1"], 1),
        (["group,0,0"], 2),
    ])
    def test_malformed_header(self, write_sample, lines, row):
        with pytest.raises(SampleFormatError) as exc_info:
            ingest_csv(write_sample(lines))
        assert exc_info.value.row == row

    def test_no_observations(self, write_sample):
        with pytest.raises(SampleFormatError):
            ingest_csv(write_sample(["group,0,0", "voter_index,0,1"]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SampleFormatError):
            ingest_csv(tmp_path / "missing.csv")
