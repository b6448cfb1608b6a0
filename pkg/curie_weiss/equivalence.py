"""
Agreement between the pair-correlation and the ML-condition estimator.

On the high-temperature set H both estimators are finite and inverted with
their high formulas; on the low-temperature set L both are inverted with
m_inverse. The audit checks every sample that falls into H or L against the
uniform bound on the gap between the two estimates, and every sample below
both minus-infinity thresholds for agreement at -inf.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from curie_weiss.core import GroupSpec, ModelSpec, m_prime, solve_m
from curie_weiss.estimators import (
    THRESHOLD_TOLERANCE,
    Regime,
    RegimeIntervals,
    gamma_from_pair,
    zeta_from_sum,
)
from curie_weiss.exceptions import AuditViolation, DomainError
from curie_weiss.sampler import SampleMatrix
from curie_weiss.statistics import compute_P, compute_T

logger = logging.getLogger('curie_weiss.equivalence')

M_PRIME_GRID_POINTS = 1024
IDENTITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class EquivalenceConfig:
    """
    Parameters of the audited sets.

    For the high case ``b > 0`` bounds both estimates from below by -b; for
    the low case ``b`` is the upper end of the coupling range [b2, b].
    ``alpha`` defaults to K/N of each group.
    """

    regime: Regime
    b: float
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.regime not in (Regime.HIGH, Regime.LOW):
            raise DomainError(f"Equivalence is audited in the high or low regime, not {self.regime.value}")
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    def alpha_for(self, group: GroupSpec) -> float:
        return group.observed_fraction if self.alpha is None else self.alpha


@dataclass(frozen=True)
class GroupMembership:
    """Set membership of one sample in one group."""

    pair: float
    squared_sum: float
    in_a: bool
    in_a_prime: bool
    in_b: bool
    in_b_prime: bool
    in_d: bool
    in_d_prime: bool

    @property
    def in_h(self) -> bool:
        return self.in_b and self.in_b_prime

    @property
    def in_l(self) -> bool:
        return self.in_d and self.in_d_prime


SetMembership = Tuple[GroupMembership, ...]


def _check_low_range(b2: float, cfg: EquivalenceConfig):
    if cfg.regime is Regime.LOW and not cfg.b > b2:
        raise DomainError(f"The low case needs b > b2, got b={cfg.b}, b2={b2}")


def membership(
    pair: float,
    squared_sum: float,
    group: GroupSpec,
    alpha: float,
    b: float,
    pair_high_upper: float,
    sum_high_upper: float,
    b2: float,
) -> GroupMembership:
    n, k = group.n_pop, group.k_obs
    m_low, m_high = solve_m(b2) ** 2, (solve_m(b) ** 2 if b > 1 else 0.0)
    return GroupMembership(
        pair=pair,
        squared_sum=squared_sum,
        in_a=n * pair <= -1.0,
        in_a_prime=squared_sum <= k * (1.0 - alpha) + THRESHOLD_TOLERANCE * k,
        in_b=-b / ((1.0 + b) * n) < pair <= pair_high_upper,
        in_b_prime=k * (1.0 + (1.0 - alpha) * b) / (1.0 + b) < squared_sum <= sum_high_upper,
        in_d=m_low <= pair <= m_high,
        in_d_prime=m_low * k * k <= squared_sum <= m_high * k * k,
    )


def classify_sample(
    sample: SampleMatrix,
    spec: ModelSpec,
    pair_intervals: RegimeIntervals,
    sum_intervals: RegimeIntervals,
    cfg: EquivalenceConfig,
) -> SetMembership:
    P, T = compute_P(sample), compute_T(sample)
    return tuple(
        membership(
            P[index],
            T[index],
            group,
            cfg.alpha_for(group),
            cfg.b,
            pair_intervals[index].high_upper,
            sum_intervals[index].high_upper,
            pair_intervals.b2,
        )
        for index, group in enumerate(spec)
    )


def minus_infinity_thresholds(group: GroupSpec, alpha: Optional[float] = None) -> Tuple[float, float]:
    """
    Squared-sum thresholds at or below which zeta-hat and gamma-hat are -inf.

    Returns:
        Tuple[float, float]: (K (1 - alpha), K (1 - (K - 1)/N)).
    """
    n, k = group.n_pop, group.k_obs
    alpha = group.observed_fraction if alpha is None else alpha
    return k * (1.0 - alpha), k * (1.0 - (k - 1) / n)


def marginal_band(group: GroupSpec, alpha: Optional[float] = None) -> Tuple[float, float]:
    """Half-open band (lo, hi] of T values where exactly one estimator is -inf."""
    zeta_threshold, gamma_threshold = minus_infinity_thresholds(group, alpha)
    return min(zeta_threshold, gamma_threshold), max(zeta_threshold, gamma_threshold)


def minimum_m_prime(b2: float, b: float) -> float:
    """Minimum of m' over [b2, b]: grid search refined around the best grid point."""
    if not 1.0 < b2 < b:
        raise DomainError(f"Need 1 < b2 < b, got b2={b2}, b={b}")
    grid = np.linspace(b2, b, M_PRIME_GRID_POINTS)
    values = np.array([m_prime(beta) for beta in grid])
    best = int(np.argmin(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    refined = optimize.minimize_scalar(m_prime, bounds=(lo, hi), method='bounded')
    minimum = float(values[best])
    if refined.success and refined.fun < minimum:
        minimum = float(refined.fun)
    return minimum


def equivalence_bound(group: GroupSpec, cfg: EquivalenceConfig, b1: float, b2: float) -> float:
    """Uniform bound on |gamma-hat - zeta-hat| over H (high case) or L (low case)."""
    n, k = group.n_pop, group.k_obs
    if cfg.regime is Regime.HIGH:
        if not 0.0 <= b1 < 1.0:
            raise DomainError(f"Need 0 <= b1 < 1, got {b1}")
        alpha = cfg.alpha_for(group)
        return (1.0 + cfg.b) ** 2 * b1 / (1.0 - b1) * abs(alpha - k / n + 1.0 / n) / alpha
    _check_low_range(b2, cfg)
    if k < 2:
        raise DomainError("The low-case bound needs K >= 2")
    return 1.0 / minimum_m_prime(b2, cfg.b) / (2.0 * solve_m(b2)) * 2.0 / (k - 1)


@dataclass
class AuditReport:
    """Outcome of the equivalence audit of one group."""

    group: int
    regime: str
    n_samples: int
    bound: float
    marginal_band: Tuple[float, float]
    n_classified: int = 0
    max_gap: float = 0.0
    violations: int = 0
    minus_infinity_samples: int = 0
    minus_infinity_violations: int = 0
    marginal_samples: int = 0
    order_violations: int = 0
    identity_violations: int = 0
    square_gap_max: float = 0.0
    square_gap_violations: int = 0
    offending: List[str] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return (
            self.violations
            + self.minus_infinity_violations
            + self.order_violations
            + self.identity_violations
            + self.square_gap_violations
        )

    @property
    def passed(self) -> bool:
        return self.total_violations == 0

    def merge(self, other: 'AuditReport') -> 'AuditReport':
        """Combine the audits of two disjoint batches of samples of the same group."""
        if (self.group, self.regime, self.bound) != (other.group, other.regime, other.bound):
            raise DomainError("Only audits of the same group and bound can be merged")
        return AuditReport(
            group=self.group,
            regime=self.regime,
            n_samples=self.n_samples + other.n_samples,
            bound=self.bound,
            marginal_band=self.marginal_band,
            n_classified=self.n_classified + other.n_classified,
            max_gap=max(self.max_gap, other.max_gap),
            violations=self.violations + other.violations,
            minus_infinity_samples=self.minus_infinity_samples + other.minus_infinity_samples,
            minus_infinity_violations=self.minus_infinity_violations + other.minus_infinity_violations,
            marginal_samples=self.marginal_samples + other.marginal_samples,
            order_violations=self.order_violations + other.order_violations,
            identity_violations=self.identity_violations + other.identity_violations,
            square_gap_max=max(self.square_gap_max, other.square_gap_max),
            square_gap_violations=self.square_gap_violations + other.square_gap_violations,
            offending=self.offending + other.offending,
        )

    def to_dict(self) -> Dict:
        record = asdict(self)
        record['marginal_band'] = list(self.marginal_band)
        record['passed'] = self.passed
        return record


def _square_gap(gamma_hat: float, zeta_hat: float) -> float:
    return abs(_m_squared(gamma_hat) - _m_squared(zeta_hat))


def _m_squared(beta: float) -> float:
    return 1.0 if beta == math.inf else solve_m(beta) ** 2


def audit_equivalence(
    samples: Sequence[SampleMatrix],
    spec: ModelSpec,
    pair_intervals: RegimeIntervals,
    sum_intervals: RegimeIntervals,
    cfg: EquivalenceConfig,
    strict: bool = False,
) -> Tuple[AuditReport, ...]:
    """
    Audit every sample against the equivalence claims, one report per group.

    Checks the gap bound on H (high case) or L (low case), agreement at -inf on
    A and A', gamma-hat <= zeta-hat on L, the algebraic identity between the
    two high formulas on H and |m(gamma-hat)^2 - m(zeta-hat)^2| <= 2/(K - 1) on
    every sample whose squared sum falls into the low band.

    Raises:
        AuditViolation: ``strict`` is set and a check fails.
    """
    _check_low_range(pair_intervals.b2, cfg)
    reports = []
    for index, group in enumerate(spec):
        alpha = cfg.alpha_for(group)
        reports.append(AuditReport(
            group=index,
            regime=cfg.regime.value,
            n_samples=len(samples),
            bound=equivalence_bound(group, cfg, pair_intervals.b1, pair_intervals.b2),
            marginal_band=marginal_band(group, alpha),
        ))

    for sample in samples:
        memberships = classify_sample(sample, spec, pair_intervals, sum_intervals, cfg)
        for index, (group, member) in enumerate(zip(spec, memberships)):
            report = reports[index]
            failures = _audit_one(report, group, member, cfg.alpha_for(group), pair_intervals,
                                  sum_intervals, cfg)
            if failures:
                digest = sample.digest()
                report.offending.append(digest)
                logger.warning(f"Group {index}: sample {digest} fails {', '.join(failures)}")
                if strict:
                    raise AuditViolation(f"Group {index} fails {', '.join(failures)}", digest)

    for report in reports:
        logger.info(
            f"Equivalence audit group {report.group} ({report.regime}): "
            f"{report.n_classified}/{report.n_samples} classified, max gap {report.max_gap:.3g}, "
            f"bound {report.bound:.3g}, {report.total_violations} violations"
        )
    return tuple(reports)


def _audit_one(
    report: AuditReport,
    group: GroupSpec,
    member: GroupMembership,
    alpha: float,
    pair_intervals: RegimeIntervals,
    sum_intervals: RegimeIntervals,
    cfg: EquivalenceConfig,
) -> List[str]:
    index = report.group
    pair_regime = pair_intervals.classify(index, member.pair)
    sum_regime = sum_intervals.classify(index, member.squared_sum)
    gamma_regime, gamma_hat = gamma_from_pair(member.pair, group.n_pop, pair_regime)
    zeta_regime, zeta_hat = zeta_from_sum(member.squared_sum, group.k_obs, alpha, sum_regime)
    failures = []

    if (gamma_regime is Regime.MINUS_INFINITY) != (zeta_regime is Regime.MINUS_INFINITY):
        report.marginal_samples += 1

    if member.in_a and member.in_a_prime:
        report.minus_infinity_samples += 1
        if not gamma_hat == zeta_hat == -math.inf:
            report.minus_infinity_violations += 1
            failures.append('minus-infinity agreement')

    k = group.k_obs
    if sum_regime is Regime.LOW and pair_regime is Regime.LOW and k > 1:
        square_gap = _square_gap(gamma_hat, zeta_hat)
        report.square_gap_max = max(report.square_gap_max, square_gap)
        if square_gap > 2.0 / (k - 1) + IDENTITY_TOLERANCE:
            report.square_gap_violations += 1
            failures.append('squared-magnetization gap')

    classified = member.in_h if cfg.regime is Regime.HIGH else member.in_l
    if not classified:
        return failures
    report.n_classified += 1
    gap = abs(gamma_hat - zeta_hat) if gamma_hat != zeta_hat else 0.0
    report.max_gap = max(report.max_gap, gap)
    if gap > report.bound + IDENTITY_TOLERANCE:
        report.violations += 1
        failures.append('gap bound')

    if cfg.regime is Regime.HIGH:
        lhs = (k - 1) / group.n_pop * gamma_hat / (1.0 - gamma_hat)
        rhs = alpha * zeta_hat / (1.0 - zeta_hat)
        if abs(lhs - rhs) > IDENTITY_TOLERANCE * max(1.0, abs(lhs)):
            report.identity_violations += 1
            failures.append('high-formula identity')
    elif gamma_hat > zeta_hat:
        report.order_violations += 1
        failures.append('gamma-hat <= zeta-hat')
    return failures
