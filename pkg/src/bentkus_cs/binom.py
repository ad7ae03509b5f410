"""Binomial kernels in log space and the standard normal quantile.

Everything the Bentkus bound consumes about ``Z ~ Bi(n, p)`` lives in a
:class:`BinomialTable`: the upper tails ``P(Z >= k)`` and the truncated
moments ``E[Z 1{Z >= k}]``, ``E[Z^2 1{Z >= k}]``.  Internally the table keeps
the *centred* truncated moments

    m1[k] = E[(Z - k)_+],   m2[k] = E[(Z - k)_+^2],
    N[k]  = P(Z >= k) m2[k] - m1[k]^2,

in log space.  Each of them is a backward sum of non-negative terms
(``m1[k] = m1[k+1] + P(Z >= k+1)``, ``m2[k] = m2[k+1] + 2 m1[k+1] +
P(Z >= k+1)``, ``N[k] = N[k+1] + P(Z = k) m2[k]``), so no subtraction ever
happens and the table stays accurate when ``p`` is tiny and ``n`` is large.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "BinomialTable",
    "binom_pmf",
    "binom_tail",
    "partial_moments",
    "tail_loglinear",
    "normal_cdf",
    "normal_inv_cdf",
]


def _check_np(n, p):
    if int(n) != n or n < 1:
        raise DomainError(f"trial count must be a positive integer, got {n!r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"success probability must lie in [0, 1], got {p!r}")


@lru_cache(maxsize=128)
def _log_binom_coef(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    out = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    out[0] = out[n] = 0.0
    out.setflags(write=False)
    return out


def _rev_logcumsum(a: np.ndarray) -> np.ndarray:
    """log(sum_{j >= k} exp(a[j])) for every k."""
    return np.logaddexp.accumulate(a[::-1])[::-1]


def binom_pmf(n: int, p: float, k: int) -> float:
    """``C(n, k) p^k (1 - p)^(n - k)`` evaluated through log-gamma."""
    _check_np(n, p)
    if int(k) != k or not 0 <= k <= n:
        raise DomainError(f"k must be an integer in [0, {n}], got {k!r}")
    k = int(k)
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_coef = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(log_coef + k * math.log(p) + (n - k) * math.log1p(-p))


class BinomialTable:
    """Tails and truncated moments of ``Bi(n, p)``, built once in O(n).

    Public arrays (read-only, length ``n + 2``, index ``n + 1`` is the empty
    event):

    ``tail[k]``  ``P(Z >= k)``
    ``e[k]``     ``E[Z 1{Z >= k}]``
    ``v[k]``     ``E[Z^2 1{Z >= k}]``
    """

    __slots__ = (
        "n", "p", "tail", "e", "v",
        "log_pmf", "log_tail", "log_m1", "log_m2", "log_nvar",
    )

    def __init__(self, n: int, p: float):
        _check_np(n, p)
        n = int(n)
        p = float(p)
        self.n = n
        self.p = p
        k = np.arange(n + 1, dtype=float)

        if p == 0.0:
            log_pmf = np.full(n + 1, -np.inf)
            log_pmf[0] = 0.0
        elif p == 1.0:
            log_pmf = np.full(n + 1, -np.inf)
            log_pmf[n] = 0.0
        else:
            log_pmf = _log_binom_coef(n) + k * math.log(p) + (n - k) * math.log1p(-p)

        with np.errstate(divide="ignore", invalid="ignore"):
            log_tail = _rev_logcumsum(log_pmf)
            log_tail[0] = 0.0

            log_m1 = np.full(n + 1, -np.inf)
            log_m1[:n] = _rev_logcumsum(log_tail[1:])

            inc = np.logaddexp(math.log(2.0) + log_m1[1:], log_tail[1:])
            log_m2 = np.full(n + 1, -np.inf)
            log_m2[:n] = _rev_logcumsum(inc)

            log_nvar = _rev_logcumsum(log_pmf + log_m2)

            # k = 0 is known in closed form; pin it to avoid accumulated rounding
            mean = n * p
            var = mean * (1.0 - p)
            log_m1[0] = math.log(mean) if mean > 0 else -np.inf
            log_m2[0] = math.log(var + mean * mean) if mean > 0 else -np.inf
            log_nvar[0] = math.log(var) if var > 0 else -np.inf

        tail = np.zeros(n + 2)
        tail[: n + 1] = np.exp(log_tail)
        m1 = np.exp(log_m1)
        m2 = np.exp(log_m2)
        e = np.zeros(n + 2)
        v = np.zeros(n + 2)
        e[: n + 1] = m1 + k * tail[: n + 1]
        v[: n + 1] = m2 + 2.0 * k * m1 + k * k * tail[: n + 1]
        e[0] = mean
        v[0] = var + mean * mean

        for arr in (tail, e, v, log_pmf, log_tail, log_m1, log_m2, log_nvar):
            arr.setflags(write=False)
        self.tail, self.e, self.v = tail, e, v
        self.log_pmf = log_pmf
        self.log_tail = log_tail
        self.log_m1 = log_m1
        self.log_m2 = log_m2
        self.log_nvar = log_nvar

    def __repr__(self):
        return f"BinomialTable(n={self.n}, p={self.p!r})"


def binom_tail(table: BinomialTable, k: int) -> float:
    """``P(Z >= k)``; 1 for ``k <= 0`` and 0 for ``k > n``."""
    if k <= 0:
        return 1.0
    if k > table.n:
        return 0.0
    return float(table.tail[int(k)])


def partial_moments(table: BinomialTable, k: int) -> tuple[float, float, float]:
    """``(P(Z >= k), E[Z 1{Z >= k}], E[Z^2 1{Z >= k}])``."""
    if int(k) != k or not 0 <= k <= table.n:
        raise DomainError(f"k must be an integer in [0, {table.n}], got {k!r}")
    k = int(k)
    return float(table.tail[k]), float(table.e[k]), float(table.v[k])


def tail_loglinear(table: BinomialTable, x: float) -> float:
    """Log-linear interpolation of ``k -> P(Z >= k)`` between lattice points."""
    if not 0.0 <= x <= table.n:
        raise DomainError(f"x must lie in [0, {table.n}], got {x!r}")
    k = math.ceil(x)
    if k == x:
        return float(table.tail[k])
    lam = x - (k - 1)
    lo, hi = table.log_tail[k - 1], table.log_tail[k]
    if hi == -np.inf:
        return 0.0
    return math.exp((1.0 - lam) * lo + lam * hi)


# ---------------------------------------------------------------------------
# standard normal

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, relative error below 1.2e-9 before refinement
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / _SQRT2)


def _acklam(u: float) -> float:
    if u < _P_LOW:
        q = math.sqrt(-2.0 * math.log(u))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if u > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-u))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = u - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_inv_cdf(u: float) -> float:
    """Standard normal quantile, accurate to about 1e-15 relative.

    One Newton step against an erfc-based CDF follows the rational start.
    The residual is taken on whichever tail ``u`` lies in, so the step does
    not lose the digits of ``1 - u`` for ``u`` near 1.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"normal quantile needs 0 < u < 1, got {u!r}")
    z = _acklam(u)
    if u < 0.5:
        resid = normal_cdf(z) - u
    else:
        resid = (1.0 - u) - _normal_sf(z)
    dens = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    if dens > 0.0:
        z -= resid / dens
    return z
