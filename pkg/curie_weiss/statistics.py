"""
Sample statistics fed to the estimators.

T is the mean squared sum of the observed votes of a group and P the mean
pair correlation of those votes. Both come from row sums only:
``P = (T - K) / (K (K - 1))`` since the squared row sum counts every ordered
pair of distinct voters once plus K diagonal terms.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from curie_weiss.conf import get_setting
from curie_weiss.exceptions import DomainError, SampleFormatError
from curie_weiss.sampler import GROUP_HEADER, VOTER_HEADER, SampleMatrix, read_csv_rows

logger = logging.getLogger('curie_weiss.statistics')

LABEL_SEPARATOR = ':'


class StatisticKind(Enum):
    PAIR_CORRELATION = 'pair_correlation'
    SQUARED_SUM = 'squared_sum'


@dataclass(frozen=True)
class StatisticVector:
    """One statistic value per group."""

    kind: StatisticKind
    values: Tuple[float, ...]
    n_obs: int
    k_obs: Tuple[int, ...]

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> float:
        return self.values[index]


def squared_sum_totals(sample: SampleMatrix) -> List[int]:
    """
    Sum over rows of the squared row sum, per group, as exact integers.

    Rows are processed in chunks of ``STAT_CHUNK_ROWS``; every partial sum is
    an integer, so the totals do not depend on the chunking.
    """
    chunk_rows = get_setting('STAT_CHUNK_ROWS')
    totals = []
    for index in range(sample.n_groups):
        block = sample.group(index)
        total = 0
        for start in range(0, sample.n_obs, chunk_rows):
            sums = block[start:start + chunk_rows].sum(axis=1, dtype=np.int64)
            total += int(np.dot(sums, sums))
        totals.append(total)
    return totals


def compute_T(sample: SampleMatrix) -> StatisticVector:
    totals = squared_sum_totals(sample)
    values = tuple(total / sample.n_obs for total in totals)
    return StatisticVector(StatisticKind.SQUARED_SUM, values, sample.n_obs, sample.k_obs)


def compute_P(sample: SampleMatrix) -> StatisticVector:
    """Mean pair correlation of the observed voters; every group needs k_obs >= 2."""
    if min(sample.k_obs) < 2:
        raise DomainError(f"Pair correlations need at least two observed voters, got {sample.k_obs}")
    totals = squared_sum_totals(sample)
    n = sample.n_obs
    values = tuple(
        (total - n * k) / (n * k * (k - 1))
        for total, k in zip(totals, sample.k_obs)
    )
    return StatisticVector(StatisticKind.PAIR_CORRELATION, values, n, sample.k_obs)


def _count_voters(labels: List[Tuple[int, str, str]], voter_row: int) -> Tuple[int, ...]:
    """Observed voters per group from (column, group, voter_index) header labels."""
    k_obs: List[int] = []
    previous_group = None
    for column, group_cell, voter_cell in labels:
        try:
            group, voter = int(group_cell), int(voter_cell)
        except ValueError:
            raise SampleFormatError("Header labels must be integers", row=1, column=column)
        if group != previous_group:
            if group != len(k_obs):
                raise SampleFormatError(
                    f"Groups must be numbered 0, 1, ... in column order, found {group}",
                    row=1,
                    column=column,
                )
            k_obs.append(0)
            previous_group = group
        if voter != k_obs[-1]:
            raise SampleFormatError(
                f"Expected voter_index {k_obs[-1]} in group {group}, found {voter}",
                row=voter_row,
                column=column,
            )
        k_obs[-1] += 1
    return tuple(k_obs)


def _parse_header(rows: List[List[str]]) -> Tuple[Tuple[int, ...], int, int]:
    """
    Voters per group, index of the first data row and index of the first spin column.

    Two layouts are accepted: the ``group`` / ``voter_index`` header rows written
    by :func:`curie_weiss.sampler.write_csv`, whose data rows start with t, and a
    single row of ``group:voter_index`` labels over spin-only data rows.
    """
    if rows and rows[0] and LABEL_SEPARATOR in rows[0][0]:
        labels = []
        for column, cell in enumerate(rows[0], start=1):
            group, separator, voter = cell.strip().partition(LABEL_SEPARATOR)
            if not separator:
                raise SampleFormatError(
                    f"Header label {cell!r} is not of the form group{LABEL_SEPARATOR}voter_index",
                    row=1,
                    column=column,
                )
            labels.append((column, group, voter))
        return _count_voters(labels, voter_row=1), 1, 0

    if len(rows) < 2:
        raise SampleFormatError("Sample file needs a group row and a voter_index row", row=len(rows) + 1)
    group_row, voter_row = rows[0], rows[1]
    if not group_row or group_row[0].strip() != GROUP_HEADER:
        raise SampleFormatError(f"First header cell must be '{GROUP_HEADER}'", row=1, column=1)
    if not voter_row or voter_row[0].strip() != VOTER_HEADER:
        raise SampleFormatError(f"First header cell must be '{VOTER_HEADER}'", row=2, column=1)
    if len(group_row) != len(voter_row) or len(group_row) < 2:
        raise SampleFormatError("Header rows must have the same number of voter columns", row=2)

    labels = [
        (column, group_cell, voter_cell)
        for column, (group_cell, voter_cell) in enumerate(zip(group_row[1:], voter_row[1:]), start=2)
    ]
    return _count_voters(labels, voter_row=2), 2, 1


def ingest_csv(path: Union[str, Path], zero_one: bool = False) -> SampleMatrix:
    """
    Read a sample written by :func:`curie_weiss.sampler.write_csv`, or one with a
    single ``group:voter_index`` header row and no t column.

    Args:
        path: CSV file.
        zero_one (bool): Entries are coded 0/1 instead of -1/+1; 0 maps to -1.

    Returns:
        SampleMatrix: The validated sample.
    """
    rows = read_csv_rows(path)
    k_obs, first_row, first_column = _parse_header(rows)
    width = sum(k_obs)
    allowed = {'0': -1, '1': 1} if zero_one else {'-1': -1, '1': 1, '+1': 1}

    data = [(line, row) for line, row in enumerate(rows[first_row:], start=first_row + 1) if row]
    if not data:
        raise SampleFormatError("Sample file holds no observations", row=first_row + 1)
    values = np.empty((len(data), width), dtype=np.int8)
    for t, (line, row) in enumerate(data):
        if len(row) != width + first_column:
            raise SampleFormatError(f"Expected {width + first_column} cells, found {len(row)}", row=line)
        for column, cell in enumerate(row[first_column:]):
            spin = allowed.get(cell.strip())
            if spin is None:
                raise SampleFormatError(
                    f"Entry {cell!r} is not one of {sorted(allowed)}",
                    row=line,
                    column=column + first_column + 1,
                )
            values[t, column] = spin
    logger.info(f"Ingested {len(data)} observations of groups {k_obs} from {path}")
    return SampleMatrix(values, k_obs)
