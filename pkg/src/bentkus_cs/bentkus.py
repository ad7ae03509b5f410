"""Bentkus tail function ``P_2`` for a binomial sum and its inverse.

For independent mean-zero variables with variance at most ``A^2`` and upper
bound ``B``, the worst case sum is a shifted, scaled binomial
``Z ~ Bi(n, p)`` with ``p = A^2 / (A^2 + B^2)``.  The tail function

    P_2(x) = inf_{y < x} E[(Z - y)_+^2] / (x - y)^2

is piecewise rational in ``x``.  With ``m1, m2, N`` the centred truncated
moments kept by :class:`~bentkus_cs.binom.BinomialTable`, branch ``k`` covers
``(psi[k-1], psi[k]]`` where ``psi[k] = k + m2[k] / m1[k]`` and reads

    P_2(x) = tail[k] * s2 / ((x - k - mu)^2 + s2),
    mu = m1[k] / tail[k],   s2 = N[k] / tail[k]^2.

Branch 0 is the quadratic (Cantelli) branch.  At a breakpoint the value is
``m1^2 / m2``, non-increasing in ``k``, which makes the branch containing a
given level easy to locate.
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._kernels import p2_quantile_offset
from .binom import BinomialTable
from .errors import DomainError, NumericError

__all__ = [
    "BentkusParams",
    "Breakpoints",
    "QuantileCache",
    "QuantileSolution",
    "psi_breakpoints",
    "p2_binomial",
    "p2_quantile_binomial",
    "solve_p2_quantile",
    "bracket_quantile",
    "bentkus_tail",
    "bentkus_quantile",
    "quantile_saturated",
    "floor_std",
    "binomial_table",
]

_E2_HALF = math.exp(2.0) / 2.0
_MEMBERSHIP_RTOL = 1e-12
_ATOM_LOG_TOL = 1e-12


@dataclass(frozen=True)
class BentkusParams:
    """Standard deviation bound ``A`` and upper bound ``B`` of the increments."""

    A: float
    B: float

    def __post_init__(self):
        if not (math.isfinite(self.B) and self.B > 0):
            raise DomainError(f"B must be positive and finite, got {self.B!r}")
        if not (math.isfinite(self.A) and self.A >= 0):
            raise DomainError(f"A must be non-negative and finite, got {self.A!r}")

    @property
    def p_AB(self) -> float:
        a2 = self.A * self.A
        return a2 / (a2 + self.B * self.B)


def floor_std(A: float, B: float, rel: float = 1e-12) -> float:
    """Lift ``A`` to at least ``rel * B`` so the two-point law stays proper."""
    return max(A, rel * B)


@lru_cache(maxsize=64)
def binomial_table(n: int, p: float) -> BinomialTable:
    """Shared immutable table for ``Bi(n, p)``."""
    return BinomialTable(n, p)


@dataclass(frozen=True)
class Breakpoints:
    """Branch endpoints ``psi[k]`` and ``log P_2(psi[k])`` for k = 0..n-1."""

    psi: np.ndarray
    log_p2: np.ndarray


def psi_breakpoints(table: BinomialTable) -> Breakpoints:
    n, p = table.n, table.p
    if not 0.0 < p < 1.0:
        raise DomainError(f"breakpoints need 0 < p < 1, got {p!r}")
    lm1 = table.log_m1[:n]
    lm2 = table.log_m2[:n]
    if not np.all(np.isfinite(lm1)):
        raise NumericError("non-positive breakpoint denominator")
    psi = np.arange(n, dtype=float) + np.exp(lm2 - lm1)
    psi[0] = n * p + (1.0 - p)
    psi[n - 1] = float(n)
    # rounding can leave neighbouring values a few ulps out of order
    psi = np.maximum.accumulate(psi)
    log_p2 = np.minimum.accumulate(2.0 * lm1 - lm2)
    psi.setflags(write=False)
    log_p2.setflags(write=False)
    return Breakpoints(psi, log_p2)


@lru_cache(maxsize=64)
def _breakpoints_for(table: BinomialTable) -> Breakpoints:
    return psi_breakpoints(table)


def _branch_value(x: float, k: int, table: BinomialTable) -> float:
    lt = table.log_tail[k]
    mu = math.exp(table.log_m1[k] - lt)
    s2 = math.exp(table.log_nvar[k] - 2.0 * lt)
    d = x - k - mu
    return math.exp(lt) * s2 / (d * d + s2)


def p2_binomial(x: float, table: BinomialTable) -> float:
    """``P_2(x)`` for ``Z ~ Bi(n, p)``."""
    n, p = table.n, table.p
    mean = n * p
    if x <= mean:
        return 1.0
    if x > n:
        return 0.0
    if p == 0.0:
        return 0.0
    if x == n:
        return math.exp(n * math.log(p))
    bp = _breakpoints_for(table)
    xs = x * (1.0 - _MEMBERSHIP_RTOL)
    k = int(np.searchsorted(bp.psi, xs, side="left"))
    k = min(k, n - 1)
    if k == 0:
        var = mean * (1.0 - p)
        d = x - mean
        return var / (d * d + var)
    return _branch_value(x, k, table)


class QuantileSolution(NamedTuple):
    x: float
    branch: int
    saturated: bool


def _check_delta(delta):
    if not (0.0 < delta <= 1.0):
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")


def bracket_quantile(delta: float, table: BinomialTable) -> tuple[int, int]:
    """Integer bracket for the quantile.

    ``k1`` is the largest k with ``P(Z >= k) >= delta``; ``k2`` the smallest
    with ``P(Z >= k) <= 2 delta / e^2``, clamped to n.  The quantile lies in
    ``[k1, k2]`` and its branch index is at most ``k2``.
    """
    _check_delta(delta)
    lt = table.log_tail
    # log_tail is non-increasing; search on its negation
    neg = -lt
    k1 = int(np.searchsorted(neg, -math.log(delta), side="right")) - 1
    k2 = int(np.searchsorted(neg, -(math.log(delta) - math.log(_E2_HALF)), side="left"))
    return max(k1, 0), min(k2, table.n)


def solve_p2_quantile(delta: float, table: BinomialTable) -> QuantileSolution:
    """Invert ``P_2`` through the breakpoint table.

    Below the top atom ``p**n`` the answer saturates at ``n`` and the flag is
    set; at the atom (to 1e-12 relative) the answer is ``n`` unflagged.
    """
    _check_delta(delta)
    n, p = table.n, table.p
    mean = n * p
    if p == 0.0:
        return QuantileSolution(0.0, 0, False)
    if p == 1.0:
        return QuantileSolution(float(n), 0, False)
    log_delta = math.log(delta)
    log_atom = n * math.log(p)
    if log_delta < log_atom - _ATOM_LOG_TOL:
        return QuantileSolution(float(n), n, True)
    if log_delta <= log_atom + _ATOM_LOG_TOL:
        return QuantileSolution(float(n), n, False)

    var = mean * (1.0 - p)
    bp = _breakpoints_for(table)
    if log_delta >= bp.log_p2[0]:
        return QuantileSolution(mean + math.sqrt(var * (1.0 - delta) / delta), 0, False)

    _, k2 = bracket_quantile(delta, table)
    hi = min(k2, n - 1)
    # first k in [1, hi] with log P_2(psi[k]) <= log delta
    k = 1 + int(np.searchsorted(-bp.log_p2[1:hi + 1], -log_delta, side="left"))
    k = min(k, n - 1)
    lt = table.log_tail[k]
    mu = math.exp(table.log_m1[k] - lt)
    s = math.exp(0.5 * table.log_nvar[k] - lt)
    x = k + mu + s * math.sqrt(max(math.expm1(lt - log_delta), 0.0))
    return QuantileSolution(min(x, float(n)), k, False)


def p2_quantile_binomial(delta: float, table: BinomialTable) -> float:
    """``x`` with ``P_2(x) = delta``; ``n`` when delta is at or below ``p**n``."""
    return solve_p2_quantile(delta, table).x


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


def bentkus_tail(u: float, n: int, params: BentkusParams) -> float:
    """Tail bound for a sum of n increments at level ``u`` (sum scale)."""
    n = _check_n(n)
    if params.A == 0:
        raise DomainError("A = 0 gives a degenerate law; floor it with floor_std")
    p = params.p_AB
    x = n * p + u * (1.0 - p) / params.B
    return p2_binomial(x, binomial_table(n, p))


def quantile_saturated(delta: float, n: int, params: BentkusParams) -> bool:
    """True when delta lies strictly below the atom ``P(sum = nB)``."""
    _check_delta(delta)
    n = _check_n(n)
    if params.A == 0:
        raise DomainError("A = 0 gives a degenerate law; floor it with floor_std")
    return math.log(delta) < n * math.log(params.p_AB) - _ATOM_LOG_TOL


class QuantileCache:
    """Thread-safe LRU map from ``(n, delta, A, B)`` to the sum-scale quantile.

    Deltas are rounded to 12 significant digits before both lookup and
    computation, so a hit returns exactly what a fresh call would.
    """

    def __init__(self, maxsize: int = 65536):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def quantize(delta: float) -> float:
        return float(f"{delta:.12g}")

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is not None:
                self._data.move_to_end(key)
                self.hits += 1
            else:
                self.misses += 1
            return val

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self):
        return len(self._data)


DEFAULT_CACHE = QuantileCache()


def _quantile_uncached(delta: float, n: int, A: float, B: float) -> float:
    a2, b2 = A * A, B * B
    p = a2 / (a2 + b2)
    log_delta = math.log(delta)
    log_atom = n * math.log(p)
    if log_delta < log_atom - _ATOM_LOG_TOL:
        return n * B + 1.0
    if log_delta <= log_atom + _ATOM_LOG_TOL:
        return n * B
    off = p2_quantile_offset(n, p, log_delta)
    return min((a2 + b2) / B * off, n * B)


def bentkus_quantile(delta: float, n: int, params: BentkusParams,
                     cache: QuantileCache | None = DEFAULT_CACHE) -> float:
    """Sum-scale level ``q`` with tail bound ``delta`` after n increments.

    Returns ``n B`` at ``delta = p**n`` and ``n B + 1`` strictly below it.
    """
    _check_delta(delta)
    n = _check_n(n)
    A, B = float(params.A), float(params.B)
    if A == 0:
        raise DomainError("A = 0 gives a degenerate law; floor it with floor_std")
    if cache is None:
        return _quantile_uncached(QuantileCache.quantize(delta), n, A, B)
    dq = QuantileCache.quantize(delta)
    key = (n, dq, A, B)
    val = cache.get(key)
    if val is None:
        val = _quantile_uncached(dq, n, A, B)
        cache.put(key, val)
    return val
