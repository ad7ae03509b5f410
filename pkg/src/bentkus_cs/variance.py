"""Time-uniform upper bounds on the standard deviation of bounded observations.

The default estimator pairs observations in arrival order and averages
``(x_{2i} - x_{2i-1})**2 / 2``, which is unbiased for the variance whatever the
mean.  A Gaussian-type correction ``g`` turns it into an over-estimate valid
at every n simultaneously.  The implicit estimator solves for the largest
standard deviation consistent with a Bentkus bound on the sum of squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .bentkus import BentkusParams, bentkus_quantile, floor_std
from .binom import normal_inv_cdf
from .errors import DomainError
from .stitching import StitchConfig, epoch

__all__ = [
    "VarEstimatorState",
    "pairwise_var_estimate",
    "g2",
    "var_upper_bound",
    "implicit_std_bound",
    "var_upper_bound_implicit",
]

_E2 = math.exp(2.0)
_MAX_NORMAL_ARG = 1.0 - 1e-12


@dataclass
class VarEstimatorState:
    """Running pair statistics for one observation stream with support
    ``[lower, upper]``."""

    lower: float
    upper: float
    count: int = 0
    pair_sum: float = 0.0
    pending: float | None = None
    running_min: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"need lower < upper, got ({self.lower}, {self.upper})")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def push(self, x: float) -> None:
        self.count += 1
        if self.pending is None:
            self.pending = x
        else:
            d = x - self.pending
            self.pair_sum += 0.5 * d * d
            self.pending = None


def pairwise_var_estimate(state: VarEstimatorState) -> float:
    """Average of the completed pair statistics."""
    if state.count < 2:
        raise DomainError("need at least two observations")
    return state.pair_sum / (state.count // 2)


def g2(n: int, delta: float, state: VarEstimatorState, cfg: StitchConfig,
       pair_divisor: bool = True) -> float:
    """Correction term added to the pairwise estimate.

    ``sqrt(floor(c/2)) (upper - lower) z / (2 sqrt(2) d)`` with ``z`` the
    normal quantile at ``1 - 2 delta / (e^2 h(k))`` for the epoch ``(k, c)`` of
    n.  ``d`` is the pair count ``floor(n/2)``, which is what solving the
    maximal inequality on the pair sums for the standard deviation gives.
    ``pair_divisor=False`` divides by n instead; that term is about half as
    large and the resulting bound misses noticeably more often than ``delta``.

    Returns 0 when ``2 delta / (e^2 h(k)) >= 1``.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    ep = epoch(n, cfg.eta)
    tail = 2.0 * delta / (_E2 * cfg.h(ep.k))
    if tail >= 1.0:
        return 0.0
    if not tail > 0.0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    z = normal_inv_cdf(min(1.0 - tail, _MAX_NORMAL_ARG))
    d = n // 2 if pair_divisor else n
    if d == 0:
        raise DomainError("pair divisor needs n >= 2")
    return math.sqrt(ep.c // 2) * state.width * z / (2.0 * math.sqrt(2.0) * d)


def var_upper_bound(state: VarEstimatorState, delta: float, cfg: StitchConfig,
                    pair_divisor: bool = True) -> float:
    """Running minimum of the standard deviation over-estimates, capped at
    half the support width.  Updates ``state.running_min``."""
    n = state.count
    if n < 1:
        raise DomainError("need at least one observation")
    cap = 0.5 * state.width
    if n == 1:
        value = cap
    else:
        g = g2(n, delta, state, cfg, pair_divisor=pair_divisor)
        value = math.sqrt(pairwise_var_estimate(state) + g * g) + g
    state.running_min = min(state.running_min, value, cap)
    return state.running_min


def implicit_std_bound(a_hat_sq: float, n: int, B: float,
                       level1: Callable[[float], float],
                       level2: Callable[[float], float],
                       tol: float = 1e-8) -> tuple[float, bool]:
    """Largest ``a`` in ``[0, B sqrt(n)]`` with

        a_hat_sq >= a**2 - (B / n) level1(a) - level2(a)**2 / n**2,

    found by bisection to absolute tolerance ``tol * B``.  The levels are
    sum-scale boundaries as functions of the standard deviation.

    Returns ``(value, saturated)``; saturated means the inequality still holds
    at the top of the search range.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    if a_hat_sq < 0:
        raise DomainError("a_hat_sq must be non-negative")

    def holds(a):
        l1 = level1(a)
        l2 = level2(a)
        return a_hat_sq >= a * a - B / n * l1 - l2 * l2 / (n * n)

    hi = B * math.sqrt(n)
    if holds(hi):
        return hi, True
    lo = 0.0
    while hi - lo > tol * B:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo, False


def var_upper_bound_implicit(a_hat_sq: float, n: int, delta1: float, delta2: float,
                             B: float, cfg: StitchConfig) -> tuple[float, bool]:
    """Implicit standard deviation bound from stitched Bentkus quantiles.

    ``a_hat_sq`` is the plain (divide by n) sample variance of observations
    bounded by ``B`` in absolute value after centring.
    """
    ep = epoch(n, cfg.eta)
    h = cfg.h(ep.k)
    d1 = delta1 / h
    d2 = delta2 / (2.0 * h)

    def level(d):
        return lambda a: bentkus_quantile(d, ep.c, BentkusParams(floor_std(a, B), B),
                                         cache=None)

    return implicit_std_bound(a_hat_sq, n, B, level(d1), level(d2))
