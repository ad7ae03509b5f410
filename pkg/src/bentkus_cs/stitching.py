"""Geometric epochs, the zeta-normalised budget schedule and the stitched boundary."""
from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .bentkus import BentkusParams, QuantileCache, DEFAULT_CACHE, bentkus_quantile
from .errors import DomainError

__all__ = [
    "StitchConfig",
    "Epoch",
    "epoch",
    "zeta",
    "budget",
    "adaptive_bentkus_bound",
]


# Bernoulli numbers B_2 .. B_20 for the Euler-Maclaurin tail
_BERNOULLI = (
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330),
)
_ZETA_HEAD = 20


def zeta(c: float) -> float:
    """Riemann zeta ``sum_{j>=1} j**-c`` for real ``c > 1``.

    Direct sum over the first 19 terms, then the Euler-Maclaurin expansion of
    the remainder at j = 20.  Absolute error is far below 1e-12 for c in
    (1, 60].
    """
    if not c > 1.0:
        raise DomainError(f"zeta needs c > 1, got {c!r}")
    N = _ZETA_HEAD
    head = math.fsum(j ** -c for j in range(1, N))
    tail = N ** (1.0 - c) / (c - 1.0) + 0.5 * N ** -c
    rising = c  # c (c+1) ... (c+2k-2)
    fact = 2.0  # (2k)!
    for k, b in enumerate(_BERNOULLI, start=1):
        if k > 1:
            rising *= (c + 2 * k - 3) * (c + 2 * k - 2)
            fact *= (2 * k - 1) * (2 * k)
        tail += float(b) / fact * rising * N ** (-c - 2 * k + 1)
    return head + tail


@dataclass(frozen=True)
class StitchConfig:
    """Epoch spacing ``eta``, power of ``h(k) = zeta(power) (k+1)**power``
    and the split of the error budget between boundary and variance."""

    eta: float = 1.1
    power: float = 1.1
    delta1: float = 0.05 * 2 / 3
    delta2: float = 0.05 / 3

    def __post_init__(self):
        if not self.eta > 1.0:
            raise DomainError(f"eta must exceed 1, got {self.eta!r}")
        if not self.power > 1.0:
            raise DomainError(f"power must exceed 1, got {self.power!r}")
        if not (0.0 < self.delta1 <= 1.0 and 0.0 < self.delta2 <= 1.0):
            raise DomainError("budgets must lie in (0, 1]")
        if self.delta1 + self.delta2 > 1.0 + 1e-12:
            raise DomainError("delta1 + delta2 must not exceed 1")
        object.__setattr__(self, "_zeta", zeta(self.power))

    @classmethod
    def for_delta(cls, delta: float, eta: float = 1.1, power: float = 1.1):
        """Two thirds of ``delta`` for the boundary, one third for the variance."""
        return cls(eta=eta, power=power, delta1=2.0 * delta / 3.0, delta2=delta / 3.0)

    def h(self, k: int) -> float:
        return self._zeta * (k + 1) ** self.power


class Epoch(NamedTuple):
    k: int
    c: int


class _EpochCaps:
    """Exact ``floor(eta**(k+1))`` for k = 0, 1, ..., grown on demand.

    Powers are taken in rational arithmetic on the exact binary value of
    ``eta`` so that floors are never off by one near integers.
    """

    def __init__(self, eta: float):
        self.base = Fraction(eta)
        self.power = Fraction(1)
        self.caps: list[int] = []
        self.lock = threading.Lock()

    def upto(self, n: int) -> list[int]:
        with self.lock:
            while not self.caps or self.caps[-1] < n:
                self.power *= self.base
                self.caps.append(math.floor(self.power))
            return self.caps


_CAPS: dict[float, _EpochCaps] = {}


def epoch(n: int, eta: float) -> Epoch:
    """Smallest k with ``ceil(eta**k) <= n <= floor(eta**(k+1))``.

    Minimality of k forces ``floor(eta**k) < n`` and so ``ceil(eta**k) <= n``;
    the search only needs the first cap that reaches n.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not eta > 1.0:
        raise DomainError(f"eta must exceed 1, got {eta!r}")
    table = _CAPS.get(eta)
    if table is None:
        table = _CAPS.setdefault(eta, _EpochCaps(eta))
    caps = table.upto(int(n))
    k = bisect.bisect_left(caps, n)
    return Epoch(k, caps[k])


def budget(k: int, cfg: StitchConfig, which: str = "boundary") -> float:
    """``delta / h(k)`` for the boundary or the variance share of the budget."""
    if k < 0:
        raise DomainError(f"epoch index must be non-negative, got {k!r}")
    if which == "boundary":
        d = cfg.delta1
    elif which == "variance":
        d = cfg.delta2
    else:
        raise DomainError(f"which must be 'boundary' or 'variance', got {which!r}")
    return d / cfg.h(k)


def adaptive_bentkus_bound(n: int, params: BentkusParams, cfg: StitchConfig,
                           cache: QuantileCache | None = DEFAULT_CACHE) -> float:
    """Level that the running sum crosses at any time with probability at most
    ``cfg.delta1``: the Bentkus quantile at the epoch cap with the epoch's
    share of the budget."""
    ep = epoch(n, cfg.eta)
    return bentkus_quantile(budget(ep.k, cfg), ep.c, params, cache=cache)
