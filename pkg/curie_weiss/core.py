"""
Exact kernel of the multi-group Curie-Weiss model.

Every quantity here is computed from the magnetization sectors of a single
group: the N + 1 possible values of the voting margin S = X_1 + ... + X_N.
Exchangeability of the spins reduces every expectation over the 2^N
configurations to a sum over these sectors, and every expectation over an
observed subset of K spins to an additional hypergeometric sum.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special, stats

from curie_weiss.conf import get_setting
from curie_weiss.exceptions import (
    BracketError,
    DomainError,
    MonotonicityError,
    ResourceBudgetError,
)

logger = logging.getLogger('curie_weiss.core')

M_LOWER = 1e-12
M_UPPER = 1.0 - 1e-12
M_TOLERANCE = 1e-12
NEWTON_POLISH_STEPS = 2
BRUTE_FORCE_MAX_N = 20
ML_CONDITION_RELATIVE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GroupSpec:
    """Coupling, population size and number of observed voters of one group."""

    beta: float
    n_pop: int
    k_obs: int

    def __post_init__(self):
        if int(self.n_pop) != self.n_pop or self.n_pop < 1:
            raise DomainError(f"n_pop must be a positive integer, got {self.n_pop}")
        if int(self.k_obs) != self.k_obs or not 1 <= self.k_obs <= self.n_pop:
            raise DomainError(
                f"k_obs must satisfy 1 <= k_obs <= n_pop={self.n_pop}, got {self.k_obs}"
            )
        if not math.isfinite(self.beta):
            raise DomainError(f"beta must be finite, got {self.beta}")

    @property
    def observed_fraction(self) -> float:
        """K/N, the finite-population stand-in for the observed fraction alpha."""
        return self.k_obs / self.n_pop


@dataclass(frozen=True)
class ModelSpec:
    """Independent (non-interacting) groups of the multi-group model."""

    groups: Tuple[GroupSpec, ...]

    def __post_init__(self):
        if not self.groups:
            raise DomainError("A model needs at least one group")
        object.__setattr__(self, 'groups', tuple(self.groups))

    @classmethod
    def from_lists(
        cls,
        betas: Sequence[float],
        n_pops: Sequence[int],
        k_obs: Sequence[int],
    ) -> 'ModelSpec':
        if not len(betas) == len(n_pops) == len(k_obs):
            raise DomainError(
                f"beta, n_pop and k_obs need one entry per group, got "
                f"{len(betas)}, {len(n_pops)} and {len(k_obs)}"
            )
        return cls(tuple(
            GroupSpec(float(beta), int(n), int(k))
            for beta, n, k in zip(betas, n_pops, k_obs)
        ))

    def __iter__(self) -> Iterator[GroupSpec]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def __getitem__(self, index: int) -> GroupSpec:
        return self.groups[index]


@dataclass(frozen=True)
class MagnetizationDistribution:
    """
    Law of the voting margin S of one group.

    ``log_weights[j]`` is ``log C(N, j) + beta * s**2 / (2N)`` for the sector with
    ``j`` yes-votes, i.e. margin ``s = 2j - N``; sectors are ordered by increasing s.
    """

    n_pop: int
    beta: float
    log_weights: np.ndarray
    log_z: float

    @property
    def plus_counts(self) -> np.ndarray:
        return np.arange(self.n_pop + 1)

    @property
    def magnetizations(self) -> np.ndarray:
        return 2 * self.plus_counts - self.n_pop

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)

    @property
    def cdf(self) -> np.ndarray:
        cumulative = np.cumsum(self.probabilities)
        cumulative[-1] = 1.0
        return cumulative


@dataclass(frozen=True)
class ExactMoments:
    """Exact finite-N moments of S and of the observed sum Sigma."""

    n_pop: int
    k_obs: int
    beta: float
    e_s2k: Dict[int, float]
    e_sigma2k: Dict[int, float]
    e_pair: float
    log_z: float

    def sigma_squared_variance(self) -> float:
        """Var(Sigma^2); needs moments up to k = 2."""
        return self.e_sigma2k[2] - self.e_sigma2k[1] ** 2


def solve_m(beta: float) -> float:
    """
    Largest solution of the Curie-Weiss equation tanh(beta * x) = x.

    Bracketed bisection on [1e-12, 1 - 1e-12] followed by Newton polish steps.

    Args:
        beta (float): Coupling, at least 1.

    Returns:
        float: m(beta) in [0, 1); 0 at beta = 1.
    """
    if beta < 1:
        raise DomainError(f"solve_m needs beta >= 1, got {beta}")
    if beta == 1:
        return 0.0

    def excess(x: float) -> float:
        return math.tanh(beta * x) - x

    if excess(M_UPPER) >= 0:
        # tanh(beta * x) rounds to 1 before x does
        return M_UPPER

    root = optimize.bisect(excess, M_LOWER, M_UPPER, xtol=M_TOLERANCE)
    for _ in range(NEWTON_POLISH_STEPS):
        t = math.tanh(beta * root)
        slope = beta * (1.0 - t * t) - 1.0
        if slope == 0.0:
            break
        candidate = root - (t - root) / slope
        if M_LOWER <= candidate <= M_UPPER and abs(excess(candidate)) <= abs(excess(root)):
            root = candidate
    return root


def _m_prime_at(beta: float, m: float) -> float:
    gap = 1.0 - m * m
    denominator = 1.0 - beta * gap
    if denominator <= 0.0:
        raise DomainError(f"m'(beta) diverges numerically at beta={beta}")
    return m * gap / denominator


def m_prime(beta: float) -> float:
    """Derivative of m at beta > 1, by implicit differentiation of tanh(beta m) = m."""
    if beta <= 1:
        raise DomainError(f"m_prime needs beta > 1, got {beta}")
    return _m_prime_at(beta, solve_m(beta))


def m_inverse(y: float) -> float:
    """The coupling beta > 1 with m(beta) = y, i.e. artanh(y)/y."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"m_inverse needs 0 < y < 1, got {y}")
    return math.atanh(y) / y


def inverse_map_derivative(y: float) -> float:
    """Derivative of y -> m_inverse(sqrt(y)) on (0, 1)."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"inverse_map_derivative needs 0 < y < 1, got {y}")
    root = math.sqrt(y)
    beta = m_inverse(root)
    return 1.0 / (_m_prime_at(beta, root) * 2.0 * root)


def _check_budget(n_pop: int, k_obs: int) -> None:
    """Refuse exact work above ``EXACT_MOMENT_BUDGET`` cells; ``k_obs=0`` sizes a sector table."""
    cells = (n_pop + 1) * (k_obs + 1)
    budget = get_setting('EXACT_MOMENT_BUDGET')
    if cells > budget:
        raise ResourceBudgetError(
            f"exact moments for N={n_pop}, K={k_obs} need {cells} cells, budget is {budget}"
        )


def magnetization_distribution(n_pop: int, beta: float) -> MagnetizationDistribution:
    """
    Sector table of the margin S for one group, computed in the log domain.

    The table is cached and its arrays are read-only, so instances can be shared
    between threads. The budget is checked on every call, cached or not.
    """
    if n_pop < 1:
        raise DomainError(f"n_pop must be positive, got {n_pop}")
    _check_budget(n_pop, 0)
    return _sector_table(n_pop, float(beta))


@lru_cache(maxsize=256)
def _sector_table(n_pop: int, beta: float) -> MagnetizationDistribution:
    plus = np.arange(n_pop + 1, dtype=float)
    margins = 2.0 * plus - n_pop
    log_weights = (
        special.gammaln(n_pop + 1)
        - special.gammaln(plus + 1)
        - special.gammaln(n_pop - plus + 1)
        + beta * margins ** 2 / (2.0 * n_pop)
    )
    log_weights.setflags(write=False)
    log_z = float(special.logsumexp(log_weights))
    logger.debug(f"Sector table N={n_pop} beta={beta}: log Z = {log_z:.12g}")
    return MagnetizationDistribution(n_pop, beta, log_weights, log_z)


def _hypergeometric_table(n_pop: int, k_obs: int) -> np.ndarray:
    """P(H = h | j yes-votes) for h = 0..K (columns) and j = 0..N (rows)."""
    _check_budget(n_pop, k_obs)
    observed = np.arange(k_obs + 1)
    plus = np.arange(n_pop + 1)
    return stats.hypergeom.pmf(observed[None, :], n_pop, plus[:, None], k_obs)


def observed_sum_distribution(n_pop: int, k_obs: int, beta: float) -> np.ndarray:
    """P(H = h), h = 0..K, for the number H of yes-votes among the K observed voters."""
    probabilities = magnetization_distribution(n_pop, beta).probabilities
    if k_obs == n_pop:
        return probabilities
    return probabilities @ _hypergeometric_table(n_pop, k_obs)


def exact_moments(n_pop: int, k_obs: int, beta: float, k_max: int = 2) -> ExactMoments:
    """
    Exact E S^{2k}, E Sigma^{2k} (k = 1..k_max) and E X_1 X_2 for one group.

    Odd moments vanish by symmetry and are not stored. ``e_pair`` is NaN for a
    single-voter population.
    """
    if n_pop < 1 or not 1 <= k_obs <= n_pop:
        raise DomainError(f"Need 1 <= k_obs <= n_pop, got k_obs={k_obs}, n_pop={n_pop}")
    if k_max < 1:
        raise DomainError(f"k_max must be positive, got {k_max}")
    _check_budget(n_pop, k_obs)

    distribution = magnetization_distribution(n_pop, beta)
    probabilities = distribution.probabilities
    margins = distribution.magnetizations.astype(float)
    e_s2k = {k: float(probabilities @ margins ** (2 * k)) for k in range(1, k_max + 1)}

    if k_obs == n_pop:
        e_sigma2k = dict(e_s2k)
    else:
        observed_law = observed_sum_distribution(n_pop, k_obs, beta)
        sums = 2.0 * np.arange(k_obs + 1) - k_obs
        e_sigma2k = {k: float(observed_law @ sums ** (2 * k)) for k in range(1, k_max + 1)}

    e_pair = (e_s2k[1] - n_pop) / (n_pop * (n_pop - 1)) if n_pop > 1 else float('nan')
    return ExactMoments(n_pop, k_obs, float(beta), e_s2k, e_sigma2k, e_pair, distribution.log_z)


def correlation_moment(n_pop: int, beta: float, k: int) -> float:
    """Exact E X_1 ... X_k; zero for odd k."""
    if not 1 <= k <= n_pop:
        raise DomainError(f"Need 1 <= k <= n_pop, got k={k}, n_pop={n_pop}")
    if k % 2:
        return 0.0
    observed_law = observed_sum_distribution(n_pop, k, beta)
    minus_votes = k - np.arange(k + 1)
    return float(observed_law @ (-1.0) ** minus_votes)


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def asymptotic_correlation(n_pop: int, beta: float, k: int = 2) -> float:
    """Large-N approximation of E X_1 ... X_k for even k and beta != 1."""
    if beta == 1:
        raise DomainError("No asymptotic correlation formula at the critical point beta = 1")
    if k % 2:
        return 0.0
    if beta < 1:
        return _double_factorial(k - 1) * (beta / (1.0 - beta)) ** (k // 2) / n_pop ** (k / 2)
    return solve_m(beta) ** k


def asymptotic_sigma_moment(
    n_pop: int,
    k_obs: int,
    beta: float,
    k: int = 1,
    alpha: Optional[float] = None,
) -> float:
    """
    Large-N approximation of E Sigma^{2k}; alpha defaults to K/N.

    In the high regime Sigma / sqrt(K) is asymptotically centred normal, so the
    k-th power of the variance carries the Gaussian factor (2k - 1)!!.
    """
    if beta == 1:
        raise DomainError("No asymptotic moment formula at the critical point beta = 1")
    if alpha is None:
        alpha = k_obs / n_pop
    if beta < 1:
        variance = (1.0 - (1.0 - alpha) * beta) / (1.0 - beta)
        return _double_factorial(2 * k - 1) * variance ** k * k_obs ** k
    return solve_m(beta) ** (2 * k) * k_obs ** (2 * k)


def brute_force_moments(n_pop: int, k_obs: int, beta: float) -> ExactMoments:
    """
    Moments by enumerating all 2^N voting configurations (N <= 20).

    Independent of the sector reduction; the pair correlation is averaged from
    the first two spins directly.
    """
    if n_pop > BRUTE_FORCE_MAX_N:
        raise DomainError(f"Enumeration is limited to N <= {BRUTE_FORCE_MAX_N}, got {n_pop}")
    if not 1 <= k_obs <= n_pop:
        raise DomainError(f"Need 1 <= k_obs <= n_pop, got k_obs={k_obs}, n_pop={n_pop}")
    codes = np.arange(2 ** n_pop)[:, None]
    spins = ((codes >> np.arange(n_pop)) & 1) * 2 - 1
    margins = spins.sum(axis=1).astype(float)
    observed = spins[:, :k_obs].sum(axis=1).astype(float)
    log_weights = beta * margins ** 2 / (2.0 * n_pop)
    log_z = float(special.logsumexp(log_weights))
    probabilities = np.exp(log_weights - log_z)
    e_pair = float(probabilities @ (spins[:, 0] * spins[:, 1])) if n_pop > 1 else float('nan')
    return ExactMoments(
        n_pop,
        k_obs,
        float(beta),
        {k: float(probabilities @ margins ** (2 * k)) for k in (1, 2)},
        {k: float(probabilities @ observed ** (2 * k)) for k in (1, 2)},
        e_pair,
        log_z,
    )


def ml_condition_solve(
    target: float,
    n_pop: int,
    k_obs: int,
    bracket: Tuple[float, float],
) -> float:
    """
    Coupling beta with E_{beta,N} Sigma^2 = target, by bisection on exact moments.

    This is the exact finite-N maximum-likelihood condition restricted to the
    observed voters.

    Args:
        target (float): Observed mean of squared subset sums.
        n_pop (int): Population size N.
        k_obs (int): Number of observed voters K.
        bracket (Tuple[float, float]): (beta_lo, beta_hi) enclosing the target.

    Returns:
        float: beta with |E Sigma^2 - target| <= 1e-9 * K^2.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise BracketError(f"Bracket must be increasing, got ({lo}, {hi})")

    def second_moment(beta: float) -> float:
        return exact_moments(n_pop, k_obs, beta, k_max=1).e_sigma2k[1]

    f_lo, f_hi = second_moment(lo), second_moment(hi)
    if f_lo > f_hi:
        raise MonotonicityError(
            f"E Sigma^2 decreases over the bracket: {f_lo:.12g} at {lo} > {f_hi:.12g} at {hi}"
        )
    if not f_lo <= target <= f_hi:
        raise BracketError(
            f"Target {target:.12g} not enclosed by E Sigma^2 range [{f_lo:.12g}, {f_hi:.12g}] "
            f"over beta in ({lo}, {hi})"
        )

    tolerance = ML_CONDITION_RELATIVE_TOLERANCE * k_obs ** 2
    if abs(f_lo - target) <= tolerance:
        return lo
    if abs(f_hi - target) <= tolerance:
        return hi

    while True:
        mid = 0.5 * (lo + hi)
        f_mid = second_moment(mid)
        if not f_lo <= f_mid <= f_hi:
            raise MonotonicityError(
                f"E Sigma^2 not increasing at beta={mid}: {f_lo:.12g}, {f_mid:.12g}, {f_hi:.12g}"
            )
        if abs(f_mid - target) <= tolerance or mid in (lo, hi):
            logger.debug(f"ML condition root for N={n_pop}, K={k_obs}, target={target}: {mid}")
            return mid
        if f_mid < target:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
