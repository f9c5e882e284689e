"""Optimal allocations, rate constants and exact false-selection probabilities.

Everything here is a pure function of its inputs. The empirical side of the package
(policies, metrics, harness) is checked against these numbers.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq
from scipy.special import erfc

from ocbarank.core import MIN_GAP, ProblemInstance
from ocbarank.errors import InstanceError, SolverError, StateError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
OUTER_MAXITER = 200
INNER_MAXITER = 100
# Bracket for the best design's share in the OCBA-2 solve.
BEST_SHARE_BRACKET = (1e-9, 1.0 - 1e-9)
ALLOC_SUM_TOL = 1e-9

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class Residuals(NamedTuple):
    """Relative residuals of an optimality-condition system."""

    balance: float
    spread: float

    @property
    def worst(self) -> float:
        return max(abs(self.balance), abs(self.spread))


class UmConstants(NamedTuple):
    h_star: float
    rho_star: float
    lai_robbins_const: float


class TheoryReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha_star: list[float]
    alpha_star2: list[float]
    eta_star: float
    eta_star2: float
    kl: list[float]
    h_star: float
    rho_star: float
    lai_robbins_const: float


def _split(mu, sigma, best: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Validate inputs and return ``(others, gaps, sigma)`` with gaps over ``others``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if mu.shape != sigma.shape or mu.size < 2:
        raise InstanceError("mu and sigma must have equal lengths >= 2")
    if not 0 <= best < mu.size:
        raise InstanceError(f"best {best} out of range [0, {mu.size})")
    if np.any(sigma <= 0):
        raise InstanceError("sigma must be strictly positive")
    others = np.array([i for i in range(mu.size) if i != best], dtype=int)
    gaps = mu[best] - mu[others]
    if np.any(gaps < MIN_GAP):
        raise InstanceError(
            f"design {best} is not uniquely best: minimum gap {gaps.min():.3g} < {MIN_GAP}"
        )
    return others, gaps, sigma


def ocba1_betas(mu, sigma, best: int) -> np.ndarray:
    others, gaps, sigma = _split(mu, sigma, best)
    beta = np.empty(sigma.size)
    beta[others] = sigma[others] ** 2 / gaps**2
    beta[best] = sigma[best] * math.sqrt(float(np.sum(sigma[others] ** 2 / gaps**4)))
    return beta


def ocba1_allocation(mu, sigma, best: int) -> np.ndarray:
    beta = ocba1_betas(mu, sigma, best)
    return beta / beta.sum()


def ocba1_residuals(alpha, mu, sigma, best: int) -> Residuals:
    """Balance and ratio conditions of the OCBA-1 system.

    The ratio condition ``n_i/n_j = sigma_i^2 gap_j^2 / (sigma_j^2 gap_i^2)`` holds iff
    ``alpha_i gap_i^2 / sigma_i^2`` is the same for every non-best design; ``spread`` is the
    range of that quantity relative to its mean.
    """
    others, gaps, sigma = _split(mu, sigma, best)
    alpha = np.asarray(alpha, dtype=float)
    balance = _balance(alpha, sigma, best, others)
    scaled = alpha[others] * gaps**2 / sigma[others] ** 2
    return Residuals(balance=balance, spread=float(np.ptp(scaled) / scaled.mean()))


def ocba2_residuals(alpha, mu, sigma, best: int) -> Residuals:
    """Balance and rate-equalisation conditions of the OCBA-2 (large-deviations) system."""
    others, gaps, sigma = _split(mu, sigma, best)
    alpha = np.asarray(alpha, dtype=float)
    balance = _balance(alpha, sigma, best, others)
    rates = _pair_rates(alpha, gaps, sigma, best, others)
    return Residuals(balance=balance, spread=float(np.ptp(rates) / rates.mean()))


def _balance(alpha: np.ndarray, sigma: np.ndarray, best: int, others: np.ndarray) -> float:
    lhs = alpha[best] ** 2 / sigma[best] ** 2
    rhs = float(np.sum(alpha[others] ** 2 / sigma[others] ** 2))
    return float((lhs - rhs) / lhs)


def _pair_rates(
    alpha: np.ndarray, gaps: np.ndarray, sigma: np.ndarray, best: int, others: np.ndarray
) -> np.ndarray:
    return gaps**2 / (sigma[others] ** 2 / alpha[others] + sigma[best] ** 2 / alpha[best])


def ocba2_allocation(mu, sigma, best: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Solve the OCBA-2 optimality conditions.

    For a best-design share ``a`` and common pairwise rate ``g``, every non-best share has the
    explicit root ``s_i^2 / (d_i^2/g - s_b^2/a)`` of its (monotone) rate equation. The rate is
    searched as ``g = a d_min^2 / (s_b^2 (1 + x))`` with ``x > 0``, which turns the shares into
    ``(a/s_b^2) s_i^2 / (r_i - 1 + r_i x)`` with ``r_i = d_i^2/d_min^2`` and keeps them exact
    however close ``g`` sits to its upper limit. The inner root search finds ``x`` such that all
    shares sum to one, the outer one finds ``a`` satisfying the balance equation.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    others, gaps, sigma = _split(mu, sigma, best)
    d2 = gaps**2
    s2 = sigma[others] ** 2
    sb2 = sigma[best] ** 2
    ratio = d2 / d2.min()
    nearest = int(np.argmin(d2))

    def shares(a: float) -> np.ndarray:
        scale = a / sb2
        room = 1.0 - a

        def excess(x: float) -> float:
            return a + scale * float(np.sum(s2 / ((ratio - 1.0) + ratio * x))) - 1.0

        # The nearest design alone overshoots at lo; every share is at most scale*s2/x at hi.
        lo = 0.5 * scale * s2[nearest] / room
        hi = 2.0 * scale * float(s2.sum()) / room
        try:
            x = brentq(excess, lo, hi, xtol=np.finfo(float).tiny, maxiter=INNER_MAXITER)
        except (RuntimeError, ValueError) as err:
            raise SolverError(f"rate search failed for best share {a:.6g}") from err
        return scale * s2 / ((ratio - 1.0) + ratio * x)

    def balance(a: float) -> float:
        return a**2 / sb2 - float(np.sum(shares(a) ** 2 / s2))

    lo, hi = BEST_SHARE_BRACKET
    if not balance(lo) < 0 < balance(hi):
        raise SolverError("balance equation is not bracketed on the best-share interval")
    try:
        a, info = brentq(
            balance,
            lo,
            hi,
            xtol=np.finfo(float).tiny,
            maxiter=OUTER_MAXITER,
            full_output=True,
        )
    except RuntimeError as err:
        raise SolverError("best-share bisection did not converge") from err
    logger.debug(f"ocba2_allocation converged in {info.iterations} outer iterations")

    alpha = np.empty(sigma.size)
    alpha[best] = a
    alpha[others] = shares(a)
    alpha /= alpha.sum()

    residuals = ocba2_residuals(alpha, mu, sigma, best)
    if residuals.worst > tol:
        raise SolverError(f"solution residuals {residuals} exceed tolerance {tol}")
    return alpha


def gaussian_kl(mu_i, sigma_i, mu_b, sigma_b):
    """KL divergence between N(mu_i, sigma_i^2) and N(mu_b, sigma_b^2); broadcasts."""
    sigma_i = np.asarray(sigma_i, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    if np.any(sigma_i <= 0) or np.any(sigma_b <= 0):
        raise InstanceError("standard deviations must be strictly positive")
    diff = np.asarray(mu_i, dtype=float) - np.asarray(mu_b, dtype=float)
    kl = (diff**2 + sigma_i**2) / (2.0 * sigma_b**2) + np.log(sigma_b / sigma_i) - 0.5
    # Rounding can leave identical distributions a hair below zero.
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl


def _check_alloc(alpha, k: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (k,):
        raise StateError(f"allocation must have {k} components, got shape {alpha.shape}")
    if np.any(alpha <= 0):
        raise StateError("allocation components must be strictly positive")
    if abs(alpha.sum() - 1.0) > ALLOC_SUM_TOL:
        raise StateError(f"allocation must sum to 1, got {alpha.sum():.12g}")
    return alpha


def rate_constants(instance: ProblemInstance, alpha, delta: int = 1) -> float:
    """Exponential PFS/EOC rate constant (eta) of an allocation; the decay exponent is eta/2."""
    if delta < 1:
        raise StateError(f"delta must be a positive integer, got {delta}")
    alpha = _check_alloc(alpha, instance.k)
    others = instance.others()
    rates = _pair_rates(
        alpha, instance.gaps[others], instance.sigma_array, instance.best, others
    )
    return float(rates.min() * delta)


def linear_regret_rate(instance: ProblemInstance, alpha, delta: int = 1) -> float:
    """Limit of CR/t for a policy whose allocation converges to ``alpha``."""
    alpha = _check_alloc(alpha, instance.k)
    return float(np.dot(instance.gaps, alpha) * delta)


def kl_to_best(instance: ProblemInstance) -> np.ndarray:
    others = instance.others()
    mu, sigma, b = instance.mu_array, instance.sigma_array, instance.best
    return gaussian_kl(mu[others], sigma[others], mu[b], sigma[b])


def um_constants(instance: ProblemInstance) -> UmConstants:
    others = instance.others()
    gaps = instance.gaps[others]
    kl = kl_to_best(instance)
    beta = ocba1_betas(instance.mu, instance.sigma, instance.best)
    alpha = beta / beta.sum()

    lai_robbins = float(np.sum(gaps / kl))
    h_star = lai_robbins / float(np.dot(alpha[others], gaps))
    return UmConstants(
        h_star=h_star, rho_star=h_star / float(beta.sum()), lai_robbins_const=lai_robbins
    )


def std_normal_cdf(x):
    """Standard normal CDF via ``erfc``; absolute error stays near machine epsilon."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def pairwise_false_prob(gap, sigma_i, sigma_b, n_i, n_b) -> float:
    """Probability that design i's sample mean beats the best design's at fixed counts."""
    if n_i < 1 or n_b < 1:
        raise StateError(f"sample counts must be >= 1, got n_i={n_i}, n_b={n_b}")
    if sigma_i <= 0 or sigma_b <= 0:
        raise InstanceError("standard deviations must be strictly positive")
    scale = math.sqrt(sigma_i**2 / n_i + sigma_b**2 / n_b)
    return float(std_normal_cdf(-gap / scale))


def pfs_bounds(instance: ProblemInstance, counts) -> tuple[float, float]:
    """Bonferroni bracket ``max_i p_i <= PFS <= (k-1) max_i p_i`` at frozen counts.

    The upper bound is not clipped to 1.
    """
    counts = np.asarray(counts)
    if counts.shape != (instance.k,):
        raise StateError(f"counts must have {instance.k} components")
    if np.any(counts < 1):
        raise StateError("every design needs at least one sample")
    b = instance.best
    sigma = instance.sigma
    pairwise = [
        pairwise_false_prob(instance.gaps[i], sigma[i], sigma[b], int(counts[i]), int(counts[b]))
        for i in instance.others()
    ]
    worst = max(pairwise)
    return worst, (instance.k - 1) * worst


def gordon_tail_bounds(x: float) -> tuple[float, float]:
    """Bracket for the normal tail ``Phi(-x)``, ``x > 0``."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    density = math.exp(-(x**2) / 2.0) / _SQRT2PI
    return x / (1.0 + x**2) * density, density / x


def theory_report(
    instance: ProblemInstance, delta: int = 1, tol: float = DEFAULT_TOL
) -> TheoryReport:
    alpha1 = ocba1_allocation(instance.mu, instance.sigma, instance.best)
    alpha2 = ocba2_allocation(instance.mu, instance.sigma, instance.best, tol=tol)
    um = um_constants(instance)
    return TheoryReport(
        alpha_star=alpha1.tolist(),
        alpha_star2=alpha2.tolist(),
        eta_star=rate_constants(instance, alpha1, delta),
        eta_star2=rate_constants(instance, alpha2, delta),
        kl=kl_to_best(instance).tolist(),
        h_star=um.h_star,
        rho_star=um.rho_star,
        lai_robbins_const=um.lai_robbins_const,
    )
