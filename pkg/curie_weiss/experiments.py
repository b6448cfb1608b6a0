"""
Experiment runners and the report writer.

Every runner takes a resolved :class:`~curie_weiss.config.ExperimentConfig`
and returns an :class:`ExperimentReport`: plot-ready rows (written as CSV) and
a summary with named pass/fail checks (written as JSON). Both files carry the
resolved configuration and the library version; the CSV keeps them in leading
``# key: value`` lines.

Replications run on a thread pool. Replication ``r`` at grid position ``i``
always samples from substream ``i * replications + r`` and results are reduced
in replication order, so serial and parallel runs give identical numbers.
"""
import csv
import json
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import reduce
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from curie_weiss import __version__
from curie_weiss.config import ExperimentConfig, ExperimentKind
from curie_weiss.core import (
    GroupSpec,
    ModelSpec,
    asymptotic_correlation,
    asymptotic_sigma_moment,
    exact_moments,
    ml_condition_solve,
)
from curie_weiss.equivalence import EquivalenceConfig, audit_equivalence
from curie_weiss.estimators import (
    VARIANCE_FUNCTIONS,
    EstimateResult,
    GroupEstimate,
    GroupTargets,
    IntervalScale,
    Regime,
    RegimeIntervals,
    attach_inference,
    build_intervals,
    compute_targets,
    confidence_interval,
    estimate_gamma,
    estimate_gamma2,
    estimate_zeta,
    limit_variance_high,
)
from curie_weiss.exceptions import BracketError, DomainError, MonotonicityError, SeparationViolated
from curie_weiss.sampler import SampleMatrix, SamplerConfig, sample_multigroup
from curie_weiss.statistics import compute_P, compute_T

logger = logging.getLogger('curie_weiss.experiments')

VARIANCE_TOLERANCE = 0.15
VARIANCE_CI_LEVEL = 0.99
NORMALITY_SIGNIFICANCE = 1.0  # percent
COVERAGE_TOLERANCE = 0.03
SLOPE_TOLERANCE = 0.25
MIN_NORMALITY_SAMPLES = 8
# median |estimate - target| must fall below the limit once n reaches this size
CONSISTENCY_FINAL_N = 100_000
CONSISTENCY_ERROR_LIMIT = 0.02
METADATA_PREFIX = '# '
OUTCOMES = ('finite', 'minus_infinity', 'plus_infinity', 'undecided', 'no_information')


@dataclass
class ExperimentReport:
    name: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failed_checks(self) -> List[str]:
        return sorted(name for name, ok in self.checks.items() if not ok)


@dataclass(frozen=True)
class EstimationSetup:
    """Model and regime intervals shared by every replication of a run."""

    spec: ModelSpec
    pair_intervals: RegimeIntervals
    sum_intervals: RegimeIntervals

    def targets(self, alpha: Optional[float] = None) -> Tuple[GroupTargets, ...]:
        return compute_targets(self.spec, self.pair_intervals, self.sum_intervals, alpha)


def build_setup(spec: ModelSpec, cfg: ExperimentConfig) -> EstimationSetup:
    return EstimationSetup(
        spec,
        build_intervals(spec, cfg.b1, cfg.b2, cfg.constants, IntervalScale.PAIR, cfg.alpha),
        build_intervals(spec, cfg.b1, cfg.b2, cfg.constants, IntervalScale.SUM, cfg.alpha),
    )


def estimate_all(
    sample: SampleMatrix,
    setup: EstimationSetup,
    estimators: Sequence[str],
) -> Dict[str, EstimateResult]:
    """Every requested closed-form estimator on one sample."""
    results = {}
    for name in estimators:
        if name == 'gamma':
            results[name] = estimate_gamma(compute_P(sample), setup.pair_intervals, setup.spec)
        elif name == 'gamma2':
            results[name] = estimate_gamma2(sample, setup.pair_intervals, setup.spec)
        elif name == 'zeta':
            results[name] = estimate_zeta(compute_T(sample), setup.sum_intervals, setup.spec)
    return results


def _closed_form(estimators: Sequence[str]) -> List[str]:
    return [name for name in estimators if name in VARIANCE_FUNCTIONS]


def _map_replications(cfg: ExperimentConfig, task: Callable[[int], Any], count: int) -> List[Any]:
    if cfg.threads == 1:
        return [task(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        return list(executor.map(task, range(count)))


def _replicate_estimates(
    cfg: ExperimentConfig,
    setup: EstimationSetup,
    n_obs: int,
    stream_offset: int,
) -> List[Dict[str, EstimateResult]]:
    estimators = _closed_form(cfg.estimators)

    def task(replication: int) -> Dict[str, EstimateResult]:
        sample = sample_multigroup(
            setup.spec, n_obs, SamplerConfig(cfg.seed, stream_offset + replication)
        )
        return estimate_all(sample, setup, estimators)

    results = _map_replications(cfg, task, cfg.replications)
    logger.debug(f"Finished {cfg.replications} replications at n={n_obs}")
    return results


def outcome(estimate: GroupEstimate) -> str:
    if estimate.value is None:
        return estimate.regime.value
    if estimate.value == -math.inf:
        return 'minus_infinity'
    if estimate.value == math.inf:
        return 'plus_infinity'
    return 'finite'


def _target(targets: GroupTargets, estimator: str) -> Optional[float]:
    return targets.zeta_tilde if estimator == 'zeta' else targets.gamma_tilde


def _quantiles(errors: np.ndarray) -> Tuple[float, float]:
    if not errors.size:
        return math.nan, math.nan
    q25, median, q75 = np.percentile(errors, [25, 50, 75])
    return float(median), float(q75 - q25)


def run_consistency(cfg: ExperimentConfig) -> ExperimentReport:
    """Median and IQR of |estimate - target| over replications, for each n in the grid."""
    setup = build_setup(cfg.model, cfg)
    targets = setup.targets(cfg.alpha)
    report = ExperimentReport('consistency')
    medians: Dict[Tuple[str, int], List[float]] = {}

    for n_index, n_obs in enumerate(cfg.n_obs):
        results = _replicate_estimates(cfg, setup, n_obs, n_index * cfg.replications)
        for name in _closed_form(cfg.estimators):
            for group in range(len(cfg.model)):
                estimates = [result[name][group] for result in results]
                target = _target(targets[group], name)
                errors = np.array([
                    abs(estimate.value - target)
                    for estimate in estimates
                    if estimate.is_finite and target is not None
                ])
                median, iqr = _quantiles(errors)
                counts = Counter(outcome(estimate) for estimate in estimates)
                report.rows.append({
                    'estimator': name,
                    'group': group,
                    'beta': cfg.model[group].beta,
                    'n_obs': n_obs,
                    'target': target,
                    'median_abs_error': median,
                    'iqr_abs_error': iqr,
                    **{f'count_{label}': counts.get(label, 0) for label in OUTCOMES},
                })
                if target is not None:
                    medians.setdefault((name, group), []).append(median)

    final_n = max(cfg.n_obs)
    for (name, group), series in medians.items():
        finite = all(math.isfinite(value) for value in series)
        report.checks[f'{name}_group{group}_median_strictly_decreasing'] = finite and all(
            later < earlier for earlier, later in zip(series, series[1:])
        )
        if name in ('gamma', 'zeta') and final_n >= CONSISTENCY_FINAL_N:
            report.checks[f'{name}_group{group}_median_below_{CONSISTENCY_ERROR_LIMIT}'] = (
                finite and series[-1] < CONSISTENCY_ERROR_LIMIT
            )
        report.summary[f'{name}_group{group}_medians'] = series
    return report


def run_clt(cfg: ExperimentConfig) -> ExperimentReport:
    """Empirical variance and normality of sqrt(n) (estimate - target) against the formulas."""
    setup = build_setup(cfg.model, cfg)
    targets = setup.targets(cfg.alpha)
    report = ExperimentReport('clt')
    covariances = []

    for n_index, n_obs in enumerate(cfg.n_obs):
        results = _replicate_estimates(cfg, setup, n_obs, n_index * cfg.replications)
        for name in _closed_form(cfg.estimators):
            scaled_by_group = []
            for group, group_spec in enumerate(cfg.model):
                target_params = targets[group]
                target = _target(target_params, name)
                scaled = np.array([
                    math.sqrt(n_obs) * (result[name][group].value - target)
                    if _usable(result[name][group], target_params, target) else math.nan
                    for result in results
                ])
                scaled_by_group.append(scaled)
                row = _clt_row(name, group, group_spec, target_params, target, n_obs, scaled)
                report.rows.append(row)
                key = f'{name}_group{group}_n{n_obs}'
                report.checks[f'{key}_variance'] = variance_agrees(row)
                report.checks[f'{key}_normality'] = bool(row['normality_passed'])
            covariances.extend(_cross_covariances(name, n_obs, scaled_by_group, report))

    report.summary['cross_group_covariance'] = covariances
    return report


def variance_agrees(row: Dict[str, Any]) -> bool:
    """
    Formula variance within ``VARIANCE_TOLERANCE`` of the empirical one, or inside
    the chi-square confidence interval of the empirical variance.
    """
    if row['variance_ratio'] is None:
        return False
    if abs(row['variance_ratio'] - 1.0) <= VARIANCE_TOLERANCE:
        return True
    low, high = row['variance_ci']
    return low <= row['formula_variance'] <= high


def _variance_interval(empirical: float, size: int) -> Tuple[float, float]:
    dof = size - 1
    tail = (1.0 - VARIANCE_CI_LEVEL) / 2.0
    return (
        dof * empirical / float(stats.chi2.ppf(1.0 - tail, dof)),
        dof * empirical / float(stats.chi2.ppf(tail, dof)),
    )


def _usable(estimate: GroupEstimate, target_params: GroupTargets, target: Optional[float]) -> bool:
    return target is not None and estimate.is_finite and estimate.regime is target_params.regime


def _clt_row(
    name: str,
    group: int,
    group_spec: GroupSpec,
    target_params: GroupTargets,
    target: Optional[float],
    n_obs: int,
    scaled: np.ndarray,
) -> Dict[str, Any]:
    values = scaled[np.isfinite(scaled)]
    formula = None
    if target is not None:
        formula = VARIANCE_FUNCTIONS[name](group_spec, target_params.regime, target_params)
    empirical = float(np.var(values, ddof=1)) if values.size >= 2 else None
    ratio = empirical / formula if empirical is not None and formula else None
    interval = _variance_interval(empirical, values.size) if empirical is not None else None

    statistic, critical, passed = None, None, False
    if values.size >= MIN_NORMALITY_SAMPLES:
        result = stats.anderson(values, dist='norm')
        levels = list(result.significance_level)
        critical = float(result.critical_values[levels.index(NORMALITY_SIGNIFICANCE)])
        statistic = float(result.statistic)
        passed = statistic < critical

    limit = None
    if name != 'gamma2' and target_params.regime is Regime.HIGH and target_params.alpha > 0:
        limit = limit_variance_high(group_spec.beta, target_params.alpha)
    return {
        'estimator': name,
        'group': group,
        'beta': group_spec.beta,
        'n_obs': n_obs,
        'replications_used': int(values.size),
        'target': target,
        'formula_variance': formula,
        'limit_variance': limit,
        'empirical_variance': empirical,
        'variance_ratio': ratio,
        'variance_ci': interval,
        'anderson_statistic': statistic,
        'anderson_critical_1pct': critical,
        'normality_passed': passed,
    }


def _cross_covariances(
    name: str,
    n_obs: int,
    scaled_by_group: List[np.ndarray],
    report: ExperimentReport,
) -> List[Dict[str, Any]]:
    entries = []
    for first in range(len(scaled_by_group)):
        for second in range(first + 1, len(scaled_by_group)):
            x, y = scaled_by_group[first], scaled_by_group[second]
            both = np.isfinite(x) & np.isfinite(y)
            if both.sum() < 2:
                continue
            x, y = x[both], y[both]
            covariance = float(np.cov(x, y)[0, 1])
            standard_error = math.sqrt(np.var(x, ddof=1) * np.var(y, ddof=1) / x.size)
            within = abs(covariance) <= 3.0 * standard_error
            report.checks[f'{name}_groups{first}_{second}_n{n_obs}_uncorrelated'] = within
            entries.append({
                'estimator': name,
                'groups': [first, second],
                'n_obs': n_obs,
                'covariance': covariance,
                'three_sigma': 3.0 * standard_error,
            })
    return entries


def run_coverage(cfg: ExperimentConfig) -> ExperimentReport:
    """Fraction of replications whose normal confidence interval covers the target."""
    setup = build_setup(cfg.model, cfg)
    targets = setup.targets(cfg.alpha)
    report = ExperimentReport('coverage')

    for n_index, n_obs in enumerate(cfg.n_obs):
        results = _replicate_estimates(cfg, setup, n_obs, n_index * cfg.replications)
        for name in _closed_form(cfg.estimators):
            for group, group_spec in enumerate(cfg.model):
                target_params = targets[group]
                target = _target(target_params, name)
                if target is None:
                    continue
                variance = VARIANCE_FUNCTIONS[name](group_spec, target_params.regime, target_params)
                covered = used = 0
                for result in results:
                    estimate = result[name][group]
                    if not _usable(estimate, target_params, target):
                        continue
                    lo, hi = confidence_interval(replace(estimate, variance=variance), n_obs, cfg.level)
                    used += 1
                    covered += lo <= target <= hi
                coverage = covered / used if used else math.nan
                report.rows.append({
                    'estimator': name,
                    'group': group,
                    'beta': group_spec.beta,
                    'n_obs': n_obs,
                    'level': cfg.level,
                    'target': target,
                    'variance': variance,
                    'replications_used': used,
                    'covered': covered,
                    'coverage': coverage,
                })
                report.checks[f'{name}_group{group}_n{n_obs}_coverage'] = (
                    used > 0 and abs(coverage - cfg.level) <= COVERAGE_TOLERANCE
                )
    return report


def _grid_spec(cfg: ExperimentConfig, n_pop: int) -> ModelSpec:
    k_obs = min(n_pop, max(2, int(round(cfg.k_fraction * n_pop))))
    return ModelSpec(tuple(GroupSpec(group.beta, n_pop, k_obs) for group in cfg.model))


def run_equivalence(cfg: ExperimentConfig) -> ExperimentReport:
    """Equivalence audits over the population grid; every sample is one replication."""
    equivalence_cfg = EquivalenceConfig(cfg.equivalence_regime, cfg.equivalence_b, cfg.alpha)
    n_obs = cfg.n_obs[0]
    report = ExperimentReport('equivalence')
    max_gaps: Dict[int, List[Tuple[int, float]]] = {}

    for n_index, n_pop in enumerate(cfg.n_pop_grid):
        spec = _grid_spec(cfg, n_pop)
        try:
            setup = build_setup(spec, cfg)
        except SeparationViolated as exc:
            logger.warning(f"Skipping N={n_pop}: {exc}")
            report.checks[f'n{n_pop}_separation'] = False
            continue

        def task(replication: int, spec=spec, setup=setup, offset=n_index * cfg.replications):
            sample = sample_multigroup(spec, n_obs, SamplerConfig(cfg.seed, offset + replication))
            return audit_equivalence(
                [sample], spec, setup.pair_intervals, setup.sum_intervals, equivalence_cfg, cfg.strict
            )

        batches = _map_replications(cfg, task, cfg.replications)
        for group, group_spec in enumerate(spec):
            audit = reduce(lambda left, right: left.merge(right), (batch[group] for batch in batches))
            record = audit.to_dict()
            record['offending'] = len(audit.offending)
            report.rows.append({
                'n_pop': n_pop,
                'k_obs': group_spec.k_obs,
                'beta': group_spec.beta,
                'n_obs': n_obs,
                **record,
            })
            report.checks[f'n{n_pop}_group{group}_no_violations'] = audit.passed
            max_gaps.setdefault(group, []).append((n_pop, audit.max_gap))

    report.summary['max_gap_by_n_pop'] = {
        f'group{group}': [{'n_pop': n, 'max_gap': gap} for n, gap in series]
        for group, series in max_gaps.items()
    }
    return report


def _loglog_slope(n_values: Sequence[int], errors: Sequence[float]) -> Optional[float]:
    points = [(n, error) for n, error in zip(n_values, errors) if error > 0 and math.isfinite(error)]
    if len(points) < 2:
        return None
    x = np.log([n for n, _ in points])
    y = np.log([error for _, error in points])
    return float(np.polyfit(x, y, 1)[0])


def run_approx_error(cfg: ExperimentConfig) -> ExperimentReport:
    """
    Exact versus asymptotic moments over the population grid.

    The pair correlation is compared on the (ln N / N)^2 (high) or
    (ln N)^{3/2} / sqrt(N) (low) scale, Sigma^{2k} / K^k (high) and
    Sigma^{2k} / K^{2k} (low) on the 1/sqrt(K) and (ln N)^{3/2} / sqrt(N)
    scales. The fitted log-log slope of every curve must match the order of
    its finite-N correction, 1/N^2 for the high-regime pair correlation and
    1/N otherwise, within the slope tolerance on either side.
    """
    report = ExperimentReport('approx_error')
    max_order = max(cfg.moment_orders)
    curves: Dict[Tuple[float, str, int], Dict[str, Any]] = {}

    for n_pop in cfg.n_pop_grid:
        spec = _grid_spec(cfg, n_pop)
        for group in spec:
            beta, k_obs = group.beta, group.k_obs
            if beta == 1.0:
                logger.warning("Skipping beta = 1: no asymptotic formula at the critical point")
                continue
            moments = exact_moments(n_pop, k_obs, beta, k_max=max_order)
            log_shape = math.log(n_pop) ** 1.5 / math.sqrt(n_pop)
            entries = [(
                'pair_correlation', 2, moments.e_pair, asymptotic_correlation(n_pop, beta, 2),
                (math.log(n_pop) / n_pop) ** 2 if beta < 1 else log_shape,
                -2.0 if beta < 1 else -0.5,
                -2.0 if beta < 1 else -1.0,
            )]
            scale = k_obs if beta < 1 else k_obs ** 2
            for order in cfg.moment_orders:
                entries.append((
                    'sigma_moment', order,
                    moments.e_sigma2k[order] / scale ** order,
                    asymptotic_sigma_moment(n_pop, k_obs, beta, order) / scale ** order,
                    1.0 / math.sqrt(k_obs) if beta < 1 else log_shape,
                    -0.5,
                    -1.0,
                ))
            for quantity, order, exact, asymptotic, shape, power, decay in entries:
                error = abs(exact - asymptotic)
                report.rows.append({
                    'beta': beta,
                    'quantity': quantity,
                    'order': order,
                    'n_pop': n_pop,
                    'k_obs': k_obs,
                    'exact': exact,
                    'asymptotic': asymptotic,
                    'abs_error': error,
                    'bound_shape': shape,
                    'implied_constant': error / shape if shape > 0 else math.nan,
                })
                curve = curves.setdefault(
                    (beta, quantity, order),
                    {'n': [], 'errors': [], 'ratios': [], 'power': power, 'decay': decay},
                )
                curve['n'].append(n_pop)
                curve['errors'].append(error)
                curve['ratios'].append(error / shape if shape > 0 else 0.0)

    fits = []
    for (beta, quantity, order), curve in curves.items():
        slope = _loglog_slope(curve['n'], curve['errors'])
        fits.append({
            'beta': beta,
            'quantity': quantity,
            'order': order,
            'slope': slope,
            'bound_power': curve['power'],
            'decay_power': curve['decay'],
            'implied_constant': max(curve['ratios']),
        })
        if slope is not None:
            report.checks[f'beta{beta}_{quantity}_k{order}_decay'] = (
                abs(slope - curve['decay']) <= SLOPE_TOLERANCE
            )
    report.summary['fits'] = fits
    return report


def run_ml_oracle_compare(cfg: ExperimentConfig) -> ExperimentReport:
    """Distance between each listed closed-form estimate and the exact finite-N ML-condition root."""
    spec = cfg.model
    estimators = _closed_form(cfg.estimators)
    if not estimators:
        raise DomainError("ml_compare needs at least one of gamma, zeta or gamma2 under [estimators] use")
    setup = build_setup(spec, cfg)
    n_obs = cfg.n_obs[0]
    report = ExperimentReport('ml_compare')

    def task(replication: int) -> List[Dict[str, Any]]:
        sample = sample_multigroup(spec, n_obs, SamplerConfig(cfg.seed, replication))
        T = compute_T(sample)
        results = estimate_all(sample, setup, estimators)
        rows = []
        for group, group_spec in enumerate(spec):
            try:
                ml_beta = ml_condition_solve(T[group], group_spec.n_pop, group_spec.k_obs, cfg.ml_bracket)
            except (BracketError, MonotonicityError) as exc:
                logger.warning(f"Replication {replication}, group {group}: {exc}")
                ml_beta = None
            for name in estimators:
                estimate = results[name][group]
                difference = None
                if ml_beta is not None and estimate.is_finite:
                    difference = abs(estimate.value - ml_beta)
                rows.append({
                    'replication': replication,
                    'group': group,
                    'beta': group_spec.beta,
                    'n_pop': group_spec.n_pop,
                    'k_obs': group_spec.k_obs,
                    'statistic': T[group],
                    'estimator': name,
                    'value': estimate.to_dict()['value'],
                    'regime': estimate.regime.value,
                    'ml_beta': ml_beta,
                    'abs_difference': difference,
                })
        return rows

    for rows in _map_replications(cfg, task, cfg.replications):
        report.rows.extend(rows)

    for group in range(len(spec)):
        group_rows = [row for row in report.rows if row['group'] == group]
        # the root does not depend on the estimator
        roots = [row for row in group_rows if row['estimator'] == estimators[0]]
        solved = [row for row in roots if row['ml_beta'] is not None]
        summary = {'solved': len(solved), 'bracket_failures': len(roots) - len(solved)}
        for name in estimators:
            differences = [
                row['abs_difference'] for row in group_rows
                if row['estimator'] == name and row['abs_difference'] is not None
            ]
            summary[name] = {
                'compared': len(differences),
                'median_abs_difference': float(np.median(differences)) if differences else None,
                'max_abs_difference': max(differences) if differences else None,
            }
        report.summary[f'group{group}'] = summary
        report.checks[f'group{group}_solved'] = bool(solved)
    return report


def estimate_report(
    sample: SampleMatrix,
    cfg: ExperimentConfig,
    with_targets: bool = False,
) -> ExperimentReport:
    """Estimates of one sample; targets, variances and intervals need the true couplings."""
    if sample.k_obs != tuple(group.k_obs for group in cfg.model):
        raise DomainError(
            f"Sample observes {sample.k_obs} voters but the model expects "
            f"{tuple(group.k_obs for group in cfg.model)}"
        )
    setup = build_setup(cfg.model, cfg)
    results = estimate_all(sample, setup, _closed_form(cfg.estimators))
    report = ExperimentReport('estimate')
    targets = setup.targets(cfg.alpha) if with_targets else None
    for name, result in results.items():
        if targets is not None:
            result = attach_inference(result, cfg.model, targets, cfg.level)
        report.rows.extend(result.to_records())
    report.summary['n_obs'] = sample.n_obs
    report.summary['sample_digest'] = sample.digest()
    return report


RUNNERS: Dict[ExperimentKind, Callable[[ExperimentConfig], ExperimentReport]] = {
    ExperimentKind.CONSISTENCY: run_consistency,
    ExperimentKind.CLT: run_clt,
    ExperimentKind.COVERAGE: run_coverage,
    ExperimentKind.EQUIVALENCE: run_equivalence,
    ExperimentKind.APPROX_ERROR: run_approx_error,
    ExperimentKind.ML_COMPARE: run_ml_oracle_compare,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    logger.info(f"Running {cfg.kind.value} experiment (seed={cfg.seed}, threads={cfg.threads})")
    report = RUNNERS[cfg.kind](cfg)
    logger.info(
        f"{cfg.kind.value}: {len(report.rows)} rows, "
        f"{len(report.checks) - len(report.failed_checks)}/{len(report.checks)} checks passed"
    )
    return report


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf' and 'nan'."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        if math.isnan(value):
            return 'nan'
        return 'inf' if value > 0 else '-inf'
    return value


def write_report(report: ExperimentReport, cfg: ExperimentConfig) -> List[Path]:
    """Write ``<name>.csv`` and/or ``<name>.json`` into the configured output directory."""
    output_dir = Path(cfg.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []

    if cfg.output_format in ('csv', 'both'):
        fieldnames: List[str] = []
        for row in report.rows:
            fieldnames.extend(key for key in row if key not in fieldnames)
        path = output_dir / f'{report.name}.csv'
        metadata = {
            'experiment': report.name,
            'version': __version__,
            'config': json.dumps(jsonable(cfg.to_dict()), sort_keys=True),
        }
        with path.open('w', newline='') as handle:
            for key, value in metadata.items():
                handle.write(f'{METADATA_PREFIX}{key}: {value}\n')
            writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator='\n')
            writer.writeheader()
            writer.writerows(jsonable(row) for row in report.rows)
        written.append(path)

    if cfg.output_format in ('json', 'both'):
        payload = {
            'experiment': report.name,
            'version': __version__,
            'config': cfg.to_dict(),
            'summary': report.summary,
            'checks': report.checks,
            'passed': report.passed,
        }
        if cfg.output_format == 'json':
            payload['rows'] = report.rows
        path = output_dir / f'{report.name}.json'
        path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + '\n')
        written.append(path)

    logger.info(f"Wrote {', '.join(str(path) for path in written)}")
    return written


def read_report_csv(path: Path) -> Tuple[Dict[str, Any], List[Dict[str, str]]]:
    """
    Metadata and rows of a CSV report written by :func:`write_report`.

    The ``config`` entry is decoded back into a dict; row values stay strings.
    """
    metadata: Dict[str, Any] = {}
    with Path(path).open(newline='') as handle:
        lines = handle.read().splitlines()
    body = []
    for line in lines:
        if line.startswith(METADATA_PREFIX) and not body:
            key, _, value = line[len(METADATA_PREFIX):].partition(': ')
            metadata[key] = value
        else:
            body.append(line)
    if 'config' in metadata:
        metadata['config'] = json.loads(metadata['config'])
    return metadata, list(csv.DictReader(body))
