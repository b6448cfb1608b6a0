"""
Exact sampling of voting configurations.

A row is drawn in two stages: the margin S from the sector table of the group
by inverse CDF, then the positions of the yes-votes uniformly at random. For
an observed subset of K voters the number of yes-votes among them is drawn
from the hypergeometric law first, so the remaining N - K spins are never
materialised. Voter positions are drawn afresh for every row.
"""
import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from curie_weiss.conf import get_setting
from curie_weiss.core import GroupSpec, ModelSpec, magnetization_distribution
from curie_weiss.exceptions import DomainError, SampleFormatError

logger = logging.getLogger('curie_weiss.sampler')

U64_LIMIT = 2 ** 64
GROUP_HEADER = 'group'
VOTER_HEADER = 'voter_index'


@dataclass(frozen=True)
class SamplerConfig:
    """
    Seed and substream of one sampling task.

    The generator is PCG64DXSM seeded by ``SeedSequence(seed,
    spawn_key=(stream_id, *path))``: distinct stream ids and paths give
    independent streams by construction.
    """

    seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        for name in ('seed', 'stream_id'):
            value = getattr(self, name)
            if not 0 <= value < U64_LIMIT:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def for_group(self, index: int) -> 'SamplerConfig':
        return SamplerConfig(self.seed, self.stream_id, self.path + (index,))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.PCG64DXSM(sequence))


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """n observations of the observed voters, columns grouped by group."""

    values: np.ndarray
    k_obs: Tuple[int, ...]
    _offsets: Tuple[Tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.int8)
        k_obs = tuple(int(k) for k in self.k_obs)
        if values.ndim != 2:
            raise DomainError(f"Sample values must be a 2-d array, got shape {values.shape}")
        if not k_obs or min(k_obs) < 1:
            raise DomainError(f"Every group needs at least one observed voter, got {k_obs}")
        if values.shape[1] != sum(k_obs):
            raise DomainError(
                f"Sample has {values.shape[1]} columns but the groups observe {sum(k_obs)} voters"
            )
        if not np.all(np.abs(values) == 1):
            raise DomainError("Sample entries must all be -1 or +1")
        values.setflags(write=False)
        stops = np.cumsum(k_obs)
        offsets = tuple((int(stop - k), int(stop)) for k, stop in zip(k_obs, stops))
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'k_obs', k_obs)
        object.__setattr__(self, '_offsets', offsets)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_groups(self) -> int:
        return len(self.k_obs)

    @property
    def group_offsets(self) -> Tuple[Tuple[int, int], ...]:
        return self._offsets

    def group(self, index: int) -> np.ndarray:
        start, stop = self._offsets[index]
        return self.values[:, start:stop]

    def restrict(self, k: int) -> 'SampleMatrix':
        """The first k observed voters of every group."""
        if k < 1 or k > min(self.k_obs):
            raise DomainError(f"Cannot restrict to {k} voters per group with k_obs={self.k_obs}")
        blocks = [self.group(index)[:, :k] for index in range(self.n_groups)]
        return SampleMatrix(np.hstack(blocks), (k,) * self.n_groups)

    def equals(self, other: 'SampleMatrix') -> bool:
        return self.k_obs == other.k_obs and np.array_equal(self.values, other.values)

    def digest(self) -> str:
        hasher = hashlib.sha256()
        hasher.update(repr(self.k_obs).encode())
        hasher.update(self.values.tobytes())
        return hasher.hexdigest()[:16]

    @classmethod
    def concatenate(cls, parts: Sequence['SampleMatrix']) -> 'SampleMatrix':
        if not parts:
            raise DomainError("Nothing to concatenate")
        if len({part.n_obs for part in parts}) != 1:
            raise DomainError("Samples of different lengths cannot be concatenated")
        k_obs = tuple(k for part in parts for k in part.k_obs)
        return cls(np.hstack([part.values for part in parts]), k_obs)


def _draw_plus_counts(group: GroupSpec, n_obs: int, rng: np.random.Generator) -> np.ndarray:
    """Number of yes-votes in the whole group, by inverse CDF of the sector table."""
    cdf = magnetization_distribution(group.n_pop, group.beta).cdf
    return np.searchsorted(cdf, rng.random(n_obs), side='right')


def _draw_observed_plus(
    plus_counts: np.ndarray,
    n_pop: int,
    k_obs: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Yes-votes among the first k_obs voters given the group totals (hypergeometric)."""
    if k_obs == n_pop:
        return plus_counts
    if k_obs <= get_setting('URN_MAX_K'):
        good = plus_counts.astype(np.int64)
        drawn = np.zeros_like(good)
        remaining = n_pop
        for _ in range(k_obs):
            hit = rng.random(good.shape[0]) * remaining < good
            drawn += hit
            good -= hit
            remaining -= 1
        return drawn

    uniforms = rng.random(plus_counts.shape[0])
    drawn = np.empty_like(plus_counts)
    for plus in np.unique(plus_counts):
        rows = plus_counts == plus
        support = np.arange(max(0, k_obs - (n_pop - plus)), min(k_obs, plus) + 1)
        cdf = np.cumsum(stats.hypergeom.pmf(support, n_pop, plus, k_obs))
        cdf[-1] = 1.0
        drawn[rows] = support[np.searchsorted(cdf, uniforms[rows], side='right')]
    return drawn


def _place_votes(plus_counts: np.ndarray, width: int, rng: np.random.Generator) -> np.ndarray:
    """Rows of +1/-1 with the given number of +1 entries at uniformly random positions."""
    ordered = np.where(np.arange(width)[None, :] < plus_counts[:, None], 1, -1).astype(np.int8)
    return rng.permuted(ordered, axis=1)


def sample_full(group: GroupSpec, n_obs: int, cfg: SamplerConfig) -> SampleMatrix:
    """n_obs i.i.d. complete voting configurations of one group."""
    if n_obs < 1:
        raise DomainError(f"n_obs must be positive, got {n_obs}")
    rng = cfg.generator()
    plus = _draw_plus_counts(group, n_obs, rng)
    return SampleMatrix(_place_votes(plus, group.n_pop, rng), (group.n_pop,))


def sample_subset(group: GroupSpec, n_obs: int, cfg: SamplerConfig) -> SampleMatrix:
    """n_obs i.i.d. observations of the first k_obs voters of one group."""
    if n_obs < 1:
        raise DomainError(f"n_obs must be positive, got {n_obs}")
    rng = cfg.generator()
    plus = _draw_plus_counts(group, n_obs, rng)
    observed = _draw_observed_plus(plus, group.n_pop, group.k_obs, rng)
    return SampleMatrix(_place_votes(observed, group.k_obs, rng), (group.k_obs,))


def sample_multigroup(spec: ModelSpec, n_obs: int, cfg: SamplerConfig) -> SampleMatrix:
    """Independent per-group subsets; group i uses the substream ``cfg.for_group(i)``."""
    parts = [
        sample_subset(group, n_obs, cfg.for_group(index))
        for index, group in enumerate(spec)
    ]
    logger.debug(
        f"Sampled {n_obs} observations of {len(parts)} groups "
        f"(seed={cfg.seed}, stream={cfg.stream_id})"
    )
    return SampleMatrix.concatenate(parts)


def write_csv(sample: SampleMatrix, path: Union[str, Path]) -> Path:
    """
    Write a sample as CSV.

    Layout::

        group,0,0,0,1,1
        voter_index,0,1,2,0,1
        0,1,-1,1,-1,-1
        1,...

    The first column holds the observation index of each data row.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    group_row: List[str] = [GROUP_HEADER]
    voter_row: List[str] = [VOTER_HEADER]
    for index, k in enumerate(sample.k_obs):
        group_row.extend([str(index)] * k)
        voter_row.extend(str(voter) for voter in range(k))

    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(group_row)
        writer.writerow(voter_row)
        for t, row in enumerate(sample.values):
            writer.writerow([t, *row.tolist()])
    logger.info(f"Wrote {sample.n_obs} observations to {path}")
    return path


def read_csv_rows(path: Union[str, Path]) -> List[List[str]]:
    path = Path(path)
    try:
        with path.open(newline='') as handle:
            return list(csv.reader(handle))
    except OSError as exc:
        raise SampleFormatError(f"Cannot read sample file {path}: {exc}") from exc
