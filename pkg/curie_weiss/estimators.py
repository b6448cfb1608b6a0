"""
Regime intervals, the pair-correlation estimator gamma-hat, the ML-condition
estimator zeta-hat, their finite-N targets and asymptotic variances.

Both estimators classify their statistic first: a value in the high band is
inverted with the high-temperature formula, a value in the low band with
m_inverse, and a value in the critical band between them is undecided. The
high band is right-closed and the low band left-closed.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from scipy import stats

from curie_weiss.conf import get_setting
from curie_weiss.core import (
    ExactMoments,
    GroupSpec,
    ModelSpec,
    exact_moments,
    m_inverse,
    m_prime,
    solve_m,
)
from curie_weiss.exceptions import DomainError, SeparationViolated, TargetRangeError
from curie_weiss.sampler import SampleMatrix
from curie_weiss.statistics import StatisticKind, StatisticVector, compute_P

logger = logging.getLogger('curie_weiss.estimators')

Alpha = Union[None, float, Sequence[float]]

THRESHOLD_TOLERANCE = 1e-12
# relative distance above K(1 - alpha) below which zeta is reported as unstable
DEGENERATE_DENOMINATOR = 1e-6
CALIBRATION_N_VALUES = tuple(range(20, 401, 20))
CALIBRATION_HIGH_BETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
CALIBRATION_LOW_BETAS = (1.2, 1.3, 1.5, 1.75, 2.0, 2.5, 3.0)


class Regime(Enum):
    HIGH = 'high'
    CRITICAL = 'undecided'
    LOW = 'low'
    MINUS_INFINITY = 'minus_infinity'
    NO_INFORMATION = 'no_information'


class IntervalScale(Enum):
    PAIR = 'pair'
    SUM = 'sum'


@dataclass(frozen=True)
class IntervalConstants:
    """Constants of the finite-N error bounds that widen the regime bands."""

    c_high: float
    c_low: float
    d_high: float
    d_low: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value >= 0:
                raise DomainError(f"Interval constant {name} must be non-negative, got {value}")

    @classmethod
    def from_settings(cls) -> 'IntervalConstants':
        return cls(**get_setting('INTERVAL_CONSTANTS'))


@dataclass(frozen=True)
class GroupIntervals:
    """Band boundaries of one group; ``lower``/``upper`` bound the statistic's range."""

    n_pop: int
    k_obs: int
    alpha: float
    lower: float
    high_upper: float
    low_lower: float
    upper: float

    def classify(self, value: float) -> Regime:
        if value <= self.high_upper:
            return Regime.HIGH
        if value >= self.low_lower:
            return Regime.LOW
        return Regime.CRITICAL


@dataclass(frozen=True)
class RegimeIntervals:
    scale: IntervalScale
    b1: float
    b2: float
    constants: IntervalConstants
    groups: Tuple[GroupIntervals, ...]

    def __getitem__(self, index: int) -> GroupIntervals:
        return self.groups[index]

    def __len__(self) -> int:
        return len(self.groups)

    def classify(self, group: int, value: float) -> Regime:
        return self.groups[group].classify(value)

    def beta_regime(self, beta: float) -> Regime:
        """HIGH for beta <= b1 (negative couplings included), LOW for beta >= b2."""
        if beta <= self.b1:
            return Regime.HIGH
        if beta >= self.b2:
            return Regime.LOW
        return Regime.CRITICAL


def _format_value(value: Optional[float], regime: Regime) -> Union[float, str]:
    if value is None:
        return regime.value
    if value == -math.inf:
        return '-inf'
    if value == math.inf:
        return 'inf'
    return value


@dataclass(frozen=True)
class GroupEstimate:
    """
    Estimate of one group's coupling.

    ``value`` is None exactly when the statistic fell into the critical band or
    the high branch of zeta-hat has no information (alpha = 0).
    """

    group: int
    estimator: str
    statistic: float
    regime: Regime
    value: Optional[float]
    target: Optional[float] = None
    variance: Optional[float] = None
    ci95: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        undecided = self.regime in (Regime.CRITICAL, Regime.NO_INFORMATION)
        if undecided != (self.value is None):
            raise DomainError(f"Regime {self.regime.value} inconsistent with value {self.value}")
        if self.regime is Regime.HIGH and not self.value < 1:
            raise DomainError(f"High-regime estimate must be below 1, got {self.value}")
        if self.regime is Regime.LOW and not self.value > 1:
            raise DomainError(f"Low-regime estimate must exceed 1, got {self.value}")

    @property
    def is_finite(self) -> bool:
        return self.value is not None and math.isfinite(self.value)

    def to_dict(self) -> Dict:
        return {
            'group': self.group,
            'estimator': self.estimator,
            'statistic': self.statistic,
            'value': _format_value(self.value, self.regime),
            'regime': self.regime.value,
            'target': self.target,
            'variance': self.variance,
            'ci': list(self.ci95) if self.ci95 is not None else None,
        }


@dataclass(frozen=True)
class EstimateResult:
    estimator: str
    n_obs: int
    groups: Tuple[GroupEstimate, ...]

    def __iter__(self) -> Iterator[GroupEstimate]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def __getitem__(self, index: int) -> GroupEstimate:
        return self.groups[index]

    @property
    def values(self) -> Tuple[Optional[float], ...]:
        return tuple(estimate.value for estimate in self.groups)

    def to_records(self) -> List[Dict]:
        return [estimate.to_dict() for estimate in self.groups]


@dataclass(frozen=True)
class GroupTargets:
    """Finite-N targets of both estimators for one group."""

    group: int
    regime: Regime
    alpha: float
    gamma_tilde: Optional[float]
    zeta_tilde: Optional[float]
    moments: ExactMoments = field(repr=False)


def _alphas(spec: ModelSpec, alpha: Alpha) -> Tuple[float, ...]:
    if alpha is None:
        values = tuple(group.observed_fraction for group in spec)
    elif isinstance(alpha, (int, float)):
        values = (float(alpha),) * len(spec)
    else:
        values = tuple(float(a) for a in alpha)
        if len(values) != len(spec):
            raise DomainError(f"Need one alpha per group, got {len(values)} for {len(spec)} groups")
    for value in values:
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {value}")
    return values


def _log_shape(n_pop: int) -> float:
    """(ln N)^{3/2} / sqrt(N)."""
    return math.log(n_pop) ** 1.5 / math.sqrt(n_pop)


def build_intervals(
    spec: ModelSpec,
    b1: float,
    b2: float,
    constants: Optional[IntervalConstants] = None,
    scale: IntervalScale = IntervalScale.PAIR,
    alpha: Alpha = None,
) -> RegimeIntervals:
    """
    Regime bands of the pair-correlation (PAIR) or squared-sum (SUM) statistic.

    Raises:
        SeparationViolated: The high band reaches the low band for some group.
    """
    if not 0.0 <= b1 < 1.0 < b2:
        raise DomainError(f"Need 0 <= b1 < 1 < b2, got b1={b1}, b2={b2}")
    constants = constants or IntervalConstants.from_settings()
    m_squared = solve_m(b2) ** 2
    groups = []
    for index, (group, a) in enumerate(zip(spec, _alphas(spec, alpha))):
        n, k = group.n_pop, group.k_obs
        if scale is IntervalScale.PAIR:
            high_upper = b1 / ((1.0 - b1) * n) + constants.c_high * (math.log(n) / n) ** 2
            low_lower = m_squared - constants.c_low * _log_shape(n)
            lower, upper = -1.0, 1.0
        else:
            high_upper = (1.0 - (1.0 - a) * b1) / (1.0 - b1) * k + constants.d_high * math.sqrt(k)
            low_lower = (m_squared - constants.d_low * _log_shape(n)) * k * k
            lower, upper = float(k % 2), float(k * k)
        if not high_upper < low_lower:
            raise SeparationViolated(index, high_upper, low_lower)
        groups.append(GroupIntervals(n, k, a, lower, high_upper, low_lower, upper))
    logger.debug(f"Built {scale.value} intervals b1={b1} b2={b2}: {groups}")
    return RegimeIntervals(scale, float(b1), float(b2), constants, tuple(groups))


def _check_inputs(statistic: StatisticVector, intervals: RegimeIntervals, spec: ModelSpec,
                  kind: StatisticKind, scale: IntervalScale):
    if statistic.kind is not kind:
        raise DomainError(f"Expected a {kind.value} statistic, got {statistic.kind.value}")
    if intervals.scale is not scale:
        raise DomainError(f"Expected {scale.value}-scale intervals, got {intervals.scale.value}")
    if not len(statistic) == len(intervals) == len(spec):
        raise DomainError("Statistic, intervals and model disagree on the number of groups")


def _low_branch(y: float) -> float:
    """m_inverse(y), with a unanimous statistic (y >= 1) mapped to +inf."""
    if y >= 1.0:
        return math.inf
    return m_inverse(y)


def gamma_from_pair(p: float, n_pop: int, regime: Regime) -> Tuple[Regime, Optional[float]]:
    if regime is Regime.HIGH:
        np_value = n_pop * p
        if np_value <= -1.0 + THRESHOLD_TOLERANCE:
            return Regime.MINUS_INFINITY, -math.inf
        return Regime.HIGH, np_value / (np_value + 1.0)
    if regime is Regime.LOW:
        return Regime.LOW, _low_branch(math.sqrt(p))
    return Regime.CRITICAL, None


def zeta_from_sum(t: float, k_obs: int, alpha: float, regime: Regime) -> Tuple[Regime, Optional[float]]:
    if regime is Regime.HIGH:
        if alpha == 0.0:
            return Regime.NO_INFORMATION, None
        threshold = k_obs * (1.0 - alpha)
        if t <= threshold + THRESHOLD_TOLERANCE * k_obs:
            return Regime.MINUS_INFINITY, -math.inf
        if t - threshold <= DEGENERATE_DENOMINATOR * k_obs:
            logger.warning(
                f"T={t} lies within {DEGENERATE_DENOMINATOR} * K of the threshold K(1 - alpha)={threshold}; "
                f"zeta is numerically unstable"
            )
        return Regime.HIGH, (k_obs - t) / (threshold - t)
    if regime is Regime.LOW:
        return Regime.LOW, _low_branch(math.sqrt(t) / k_obs)
    return Regime.CRITICAL, None


def estimate_gamma(
    P: StatisticVector,
    intervals: RegimeIntervals,
    spec: ModelSpec,
    estimator: str = 'gamma',
) -> EstimateResult:
    """Pair-correlation estimator of every group's coupling."""
    _check_inputs(P, intervals, spec, StatisticKind.PAIR_CORRELATION, IntervalScale.PAIR)
    groups = []
    for index, (p, group) in enumerate(zip(P, spec)):
        regime, value = gamma_from_pair(p, group.n_pop, intervals.classify(index, p))
        groups.append(GroupEstimate(index, estimator, p, regime, value))
    return EstimateResult(estimator, P.n_obs, tuple(groups))


def estimate_zeta(
    T: StatisticVector,
    intervals: RegimeIntervals,
    spec: ModelSpec,
    alpha: Alpha = None,
) -> EstimateResult:
    """ML-condition estimator; alpha defaults to the value the intervals were built with."""
    _check_inputs(T, intervals, spec, StatisticKind.SQUARED_SUM, IntervalScale.SUM)
    alphas = (
        tuple(group.alpha for group in intervals.groups) if alpha is None else _alphas(spec, alpha)
    )
    groups = []
    for index, (t, group, a) in enumerate(zip(T, spec, alphas)):
        regime, value = zeta_from_sum(t, group.k_obs, a, intervals.classify(index, t))
        groups.append(GroupEstimate(index, 'zeta', t, regime, value))
    return EstimateResult('zeta', T.n_obs, tuple(groups))


def estimate_gamma2(
    sample: SampleMatrix,
    intervals: RegimeIntervals,
    spec: ModelSpec,
) -> EstimateResult:
    """Pair-correlation estimator restricted to the first two observed voters of each group."""
    return estimate_gamma(compute_P(sample.restrict(2)), intervals, spec, estimator='gamma2')


def compute_targets(
    spec: ModelSpec,
    pair_intervals: RegimeIntervals,
    sum_intervals: RegimeIntervals,
    alpha: Alpha = None,
) -> Tuple[GroupTargets, ...]:
    """
    Finite-N targets: the couplings for which the inversion formulas are exact
    given the exact moments of the model.

    Raises:
        TargetRangeError: beta lies in the critical band or a moment cannot be inverted.
    """
    alphas = (
        tuple(group.alpha for group in sum_intervals.groups) if alpha is None else _alphas(spec, alpha)
    )
    targets = []
    for index, (group, a) in enumerate(zip(spec, alphas)):
        regime = pair_intervals.beta_regime(group.beta)
        if regime is Regime.CRITICAL:
            raise TargetRangeError(
                f"beta={group.beta} of group {index} lies between b1={pair_intervals.b1} "
                f"and b2={pair_intervals.b2}"
            )
        if sum_intervals.beta_regime(group.beta) is not regime:
            raise DomainError("Pair and sum intervals classify beta differently")
        moments = exact_moments(group.n_pop, group.k_obs, group.beta, k_max=2)
        gamma_tilde = _gamma_target(group, regime, moments)
        zeta_tilde = _zeta_target(group, regime, moments, a)
        targets.append(GroupTargets(index, regime, a, gamma_tilde, zeta_tilde, moments))
        logger.debug(f"Targets of group {index}: gamma={gamma_tilde}, zeta={zeta_tilde}")
    return tuple(targets)


def _gamma_target(group: GroupSpec, regime: Regime, moments: ExactMoments) -> float:
    e_pair = moments.e_pair
    if regime is Regime.HIGH:
        scaled = group.n_pop * e_pair
        if not scaled > -1.0:
            raise TargetRangeError(f"N E[X1 X2] = {scaled} is not above -1")
        return scaled / (scaled + 1.0)
    if not 0.0 < e_pair < 1.0:
        raise TargetRangeError(f"E[X1 X2] = {e_pair} is outside (0, 1)")
    return m_inverse(math.sqrt(e_pair))


def _zeta_target(group: GroupSpec, regime: Regime, moments: ExactMoments, alpha: float) -> Optional[float]:
    k = group.k_obs
    second = moments.e_sigma2k[1]
    if regime is Regime.HIGH:
        if alpha == 0.0:
            return None
        threshold = k * (1.0 - alpha)
        if not second > threshold:
            raise TargetRangeError(f"E Sigma^2 = {second} is not above K(1 - alpha) = {threshold}")
        return (k - second) / (threshold - second)
    y = math.sqrt(second) / k
    if not 0.0 < y < 1.0:
        raise TargetRangeError(f"sqrt(E Sigma^2)/K = {y} is outside (0, 1)")
    return m_inverse(y)


def _low_slope(target: float) -> float:
    """(2 m m')^2 at the given coupling."""
    return (2.0 * solve_m(target) * m_prime(target)) ** 2


def asymptotic_variance_gamma(group: GroupSpec, regime: Regime, targets: GroupTargets) -> float:
    """Delta-method variance of sqrt(n) (gamma-hat - gamma-tilde) for one group."""
    k, n = group.k_obs, group.n_pop
    if k < 2:
        raise DomainError("gamma-hat needs at least two observed voters")
    variance = targets.moments.sigma_squared_variance()
    if regime is Regime.HIGH:
        return (1.0 - targets.gamma_tilde) ** 4 * (n / (k - 1)) ** 2 * variance / k ** 2
    if regime is Regime.LOW:
        return (k / (k - 1)) ** 2 * variance / k ** 4 / _low_slope(targets.gamma_tilde)
    raise DomainError(f"No asymptotic variance in regime {regime.value}")


def asymptotic_variance_gamma2(group: GroupSpec, regime: Regime, targets: GroupTargets) -> float:
    """Variance of sqrt(n) (gamma2-hat - gamma-tilde); only the pair moment enters."""
    spread = 1.0 - targets.moments.e_pair ** 2
    if regime is Regime.HIGH:
        return (1.0 - targets.gamma_tilde) ** 4 * group.n_pop ** 2 * spread
    if regime is Regime.LOW:
        return spread / _low_slope(targets.gamma_tilde)
    raise DomainError(f"No asymptotic variance in regime {regime.value}")


def asymptotic_variance_zeta(
    group: GroupSpec,
    regime: Regime,
    targets: GroupTargets,
    alpha: Optional[float] = None,
) -> float:
    """Delta-method variance of sqrt(n) (zeta-hat - zeta-tilde) for one group."""
    k, n = group.k_obs, group.n_pop
    alpha = targets.alpha if alpha is None else alpha
    variance = targets.moments.sigma_squared_variance()
    if regime is Regime.HIGH:
        if alpha <= 0.0:
            raise DomainError("zeta-hat carries no information in the high regime when alpha = 0")
        if k < 2:
            raise DomainError("The high-regime variance of zeta-hat needs K >= 2")
        return (1.0 - targets.zeta_tilde) ** 4 * (n / (k - 1)) ** 2 * variance / k ** 2
    if regime is Regime.LOW:
        return variance / k ** 4 / _low_slope(targets.zeta_tilde)
    raise DomainError(f"No asymptotic variance in regime {regime.value}")


VARIANCE_FUNCTIONS = {
    'gamma': asymptotic_variance_gamma,
    'gamma2': asymptotic_variance_gamma2,
    'zeta': asymptotic_variance_zeta,
}


def limit_variance_high(beta: float, alpha: float) -> float:
    """N -> infinity limit of the high-regime variance of zeta-hat (and gamma-hat)."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not beta < 1.0:
        raise DomainError(f"High-regime limit needs beta < 1, got {beta}")
    return 2.0 * (1.0 - beta) ** 2 * (1.0 - (1.0 - alpha) * beta) ** 2 / alpha ** 2


def limit_variance_gamma2(n_pop: int, beta: float) -> float:
    """Leading-order variance of the K = 2 estimator."""
    if beta < 1.0:
        return (1.0 - beta) ** 4 * n_pop ** 2
    if beta > 1.0:
        m = solve_m(beta)
        return (1.0 - m ** 2) / _low_slope(beta)
    raise DomainError("No limit variance at the critical point beta = 1")


def confidence_interval(
    estimate: GroupEstimate,
    n_obs: int,
    level: float = 0.95,
) -> Tuple[float, float]:
    """Normal-approximation interval ``value +- z * sqrt(variance / n_obs)``."""
    if not estimate.is_finite or estimate.regime not in (Regime.HIGH, Regime.LOW):
        raise DomainError(f"No confidence interval for a {estimate.regime.value} estimate")
    if estimate.variance is None:
        raise DomainError("Estimate carries no variance")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    half_width = stats.norm.ppf(0.5 + level / 2.0) * math.sqrt(estimate.variance / n_obs)
    return estimate.value - half_width, estimate.value + half_width


def attach_inference(
    result: EstimateResult,
    spec: ModelSpec,
    targets: Sequence[GroupTargets],
    level: float = 0.95,
) -> EstimateResult:
    """Fill in target, variance and confidence interval wherever they are defined."""
    variance_of = VARIANCE_FUNCTIONS[result.estimator]
    enriched = []
    for estimate, group, target in zip(result, spec, targets):
        target_value = target.zeta_tilde if result.estimator == 'zeta' else target.gamma_tilde
        estimate = replace(estimate, target=target_value)
        if target_value is not None and estimate.regime is target.regime and estimate.is_finite:
            variance = variance_of(group, target.regime, target)
            estimate = replace(estimate, variance=variance)
            estimate = replace(estimate, ci95=confidence_interval(estimate, result.n_obs, level))
        enriched.append(estimate)
    return replace(result, groups=tuple(enriched))


@dataclass(frozen=True)
class CalibrationResult:
    constants: IntervalConstants
    alpha: float
    n_values: Tuple[int, ...]
    worst_case: Dict[str, Dict[str, float]]

    def to_dict(self) -> Dict:
        return {
            'constants': asdict(self.constants),
            'alpha': self.alpha,
            'n_values': list(self.n_values),
            'worst_case': self.worst_case,
        }


def calibrate_constants(
    n_values: Sequence[int] = CALIBRATION_N_VALUES,
    high_betas: Sequence[float] = CALIBRATION_HIGH_BETAS,
    low_betas: Sequence[float] = CALIBRATION_LOW_BETAS,
    alpha: float = 0.5,
) -> CalibrationResult:
    """
    Interval constants from exact moments: the largest ratio of the exact
    approximation error to its bound shape over the sweep.
    """
    ratios = {name: (0.0, {}) for name in ('c_high', 'c_low', 'd_high', 'd_low')}

    def record(name: str, ratio: float, n: int, beta: float):
        if ratio > ratios[name][0]:
            ratios[name] = (ratio, {'ratio': ratio, 'n_pop': n, 'beta': beta})

    for n in n_values:
        if n < 2:
            continue
        k = max(2, int(round(alpha * n)))
        observed_fraction = k / n
        for beta in high_betas:
            moments = exact_moments(n, k, beta, k_max=1)
            shape = (math.log(n) / n) ** 2
            record('c_high', abs(moments.e_pair - beta / ((1.0 - beta) * n)) / shape, n, beta)
            expected = k * (1.0 - (1.0 - observed_fraction) * beta) / (1.0 - beta)
            record('d_high', abs(moments.e_sigma2k[1] - expected) / math.sqrt(k), n, beta)
        for beta in low_betas:
            moments = exact_moments(n, k, beta, k_max=1)
            m_squared = solve_m(beta) ** 2
            record('c_low', abs(moments.e_pair - m_squared) / _log_shape(n), n, beta)
            record('d_low', abs(moments.e_sigma2k[1] / k ** 2 - m_squared) / _log_shape(n), n, beta)

    constants = IntervalConstants(**{name: value for name, (value, _) in ratios.items()})
    logger.info(f"Calibrated interval constants: {constants}")
    return CalibrationResult(
        constants,
        alpha,
        tuple(int(n) for n in n_values),
        {name: detail for name, (_, detail) in ratios.items()},
    )
