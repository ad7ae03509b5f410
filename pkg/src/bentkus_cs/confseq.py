"""Online confidence sequences for the mean of bounded observations.

``A-Bentkus`` combines the stitched Bentkus boundary with the pairwise
standard deviation over-estimate and feeds each side's previous bound back in
as a tighter range for the next step.  The baselines are the usual
Hoeffding and Bernstein radii, fixed-n or stitched.

All radii returned by the ``*_bound`` functions are on the sum scale; divide
by n for the mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bentkus import BentkusParams, bentkus_quantile, floor_std
from .errors import DomainError
from .stitching import StitchConfig, epoch
from .variance import VarEstimatorState, var_upper_bound

__all__ = [
    "METHODS",
    "ConfidenceInterval",
    "ConfSeqState",
    "make_confseq",
    "update",
    "hoeffding_bound",
    "adaptive_hoeffding_bound",
    "bernstein_bound",
    "empirical_bernstein_bound",
]

A_BENTKUS = "A-Bentkus"
A_HOEFFDING = "A-Hoeffding"
E_BERNSTEIN = "E-Bernstein"
HOEFFDING = "Hoeffding-fixed"
BERNSTEIN = "Bernstein-fixed"
METHODS = (A_BENTKUS, A_HOEFFDING, E_BERNSTEIN, HOEFFDING, BERNSTEIN)
# methods whose guarantee holds simultaneously over all n
ANYTIME_METHODS = (A_BENTKUS, A_HOEFFDING, E_BERNSTEIN)


def _width(support):
    L, U = support
    if not L < U:
        raise DomainError(f"support needs L < U, got ({L}, {U})")
    return U - L


def hoeffding_bound(n: int, delta: float, support) -> float:
    """Fixed-n Hoeffding: ``sqrt(n (U - L)**2 log(1/delta) / 2)``."""
    w = _width(support)
    return math.sqrt(n * w * w * math.log(1.0 / delta) / 2.0)


def adaptive_hoeffding_bound(n: int, delta: float, support) -> float:
    """Stitched Hoeffding with the 1.1 / 0.6 / 1.8 constants of the
    adaptive-Hoeffding literature.  n = 1 is evaluated at n = 2."""
    w = _width(support)
    n = max(n, 2)
    return w * math.sqrt(0.6 * n * math.log(math.log(n, 1.1) + 1.0)
                         + n * math.log(12.0 / delta) / 1.8)


def bernstein_bound(n: int, delta: float, A: float, B: float) -> float:
    """Fixed-n Bernstein for increments with standard deviation ``A`` and
    upper bound ``B``."""
    ell = math.log(1.0 / delta)
    return math.sqrt(2.0 * n * A * A * ell + B * B * ell * ell / 9.0) + B * ell / 3.0


def empirical_bernstein_bound(n: int, delta: float, a_hat_sq: float, B: float,
                              cfg: StitchConfig) -> float:
    """Stitched empirical Bernstein with the plain sample variance ``a_hat_sq``
    and range ``B``."""
    ep = epoch(n, cfg.eta)
    ell = math.log(3.0 * cfg.h(ep.k) / (2.0 * delta))
    eta = cfg.eta
    return math.sqrt(2.0 * n * eta * a_hat_sq * ell) + 3.0 * B * eta * ell


@dataclass(frozen=True)
class ConfidenceInterval:
    """Interval for the mean after ``n`` observations.

    ``lower``/``upper`` are the reported endpoints (inside the support).
    ``raw_lower``/``raw_upper`` are the one-step A-Bentkus bounds before the
    running intersection, or the untruncated baseline endpoints.
    """

    n: int
    lower: float
    upper: float
    raw_lower: float
    raw_upper: float
    delta: float
    empty: bool = False

    @property
    def radius(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def raw_radius(self) -> float:
        return 0.5 * (self.raw_upper - self.raw_lower)

    def contains(self, mu: float) -> bool:
        return self.lower <= mu <= self.upper


@dataclass
class ConfSeqState:
    method: str
    support: tuple
    delta: float
    cfg: StitchConfig
    known_std: float | None = None
    pair_divisor: bool = True
    n: int = 0
    sum: float = 0.0
    sumsq: float = 0.0
    var_state: VarEstimatorState | None = None
    mu_up_prev: float = math.nan
    mu_lo_prev: float = math.nan
    mu_up_star: float = math.nan
    mu_lo_star: float = math.nan
    last: ConfidenceInterval | None = field(default=None, repr=False)

    @property
    def mean(self) -> float:
        return self.sum / self.n if self.n else math.nan

    def interval(self) -> ConfidenceInterval:
        if self.last is not None:
            return self.last
        L, U = self.support
        return ConfidenceInterval(0, L, U, L, U, self.delta)

    def update(self, y: float) -> ConfidenceInterval:
        return update(self, y)


def make_confseq(method: str, support, delta: float, cfg: StitchConfig | None = None,
                 known_std: float | None = None, pair_divisor: bool = True) -> ConfSeqState:
    """Fresh state for ``method`` on observations in ``support = (L, U)``.

    ``cfg`` defaults to a two-thirds / one-third split of ``delta`` with
    ``eta = power = 1.1``; only its ``eta`` and ``power`` are read by the
    baselines.  ``Bernstein-fixed`` needs ``known_std``.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    L, U = float(support[0]), float(support[1])
    _width((L, U))
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    if cfg is None:
        cfg = StitchConfig.for_delta(delta)
    if method == BERNSTEIN and known_std is None:
        raise DomainError("Bernstein-fixed needs known_std")
    st = ConfSeqState(method, (L, U), float(delta), cfg, known_std=known_std,
                      pair_divisor=pair_divisor)
    if method == A_BENTKUS:
        st.var_state = VarEstimatorState(L, U)
        st.mu_up_prev = st.mu_up_star = U
        st.mu_lo_prev = st.mu_lo_star = L
    return st


def _a_bentkus_step(st: ConfSeqState) -> ConfidenceInterval:
    L, U = st.support
    n = st.n
    cfg = st.cfg
    a_bar = var_upper_bound(st.var_state, cfg.delta2, cfg, pair_divisor=st.pair_divisor)
    ep = epoch(n, cfg.eta)
    d_side = cfg.delta1 / (2.0 * cfg.h(ep.k))
    tiny = 1e-12 * (U - L)
    ybar = st.sum / n

    # the mean lies in [L, U], so a previous bound outside it (a saturated
    # quantile) is clipped before it sets the increment range
    b_up = max(min(st.mu_up_prev, U) - L, tiny)
    q_up = bentkus_quantile(d_side, ep.c, BentkusParams(floor_std(a_bar, b_up), b_up))
    b_lo = max(U - max(st.mu_lo_prev, L), tiny)
    q_lo = bentkus_quantile(d_side, ep.c, BentkusParams(floor_std(a_bar, b_lo), b_lo))

    mu_up = ybar + q_up / n
    mu_lo = ybar - q_lo / n
    st.mu_up_prev, st.mu_lo_prev = mu_up, mu_lo
    st.mu_up_star = min(st.mu_up_star, mu_up)
    st.mu_lo_star = max(st.mu_lo_star, mu_lo)
    lo, up = st.mu_lo_star, st.mu_up_star
    empty = lo > up
    if empty:
        # the running intersection has no points left; report its midpoint
        lo = up = 0.5 * (lo + up)
    return ConfidenceInterval(n, lo, up, mu_lo, mu_up, st.delta, empty)


def _baseline_radius(st: ConfSeqState) -> float:
    n, L, U = st.n, *st.support
    side = st.delta / 2.0
    if st.method == HOEFFDING:
        return hoeffding_bound(n, side, st.support)
    if st.method == A_HOEFFDING:
        return adaptive_hoeffding_bound(n, side, st.support)
    if st.method == BERNSTEIN:
        return bernstein_bound(n, side, st.known_std, U - L)
    if st.method == E_BERNSTEIN:
        m = st.sum / n - L
        a_hat_sq = max(st.sumsq / n - m * m, 0.0)
        return empirical_bernstein_bound(n, side, a_hat_sq, U - L, st.cfg)
    raise DomainError(f"unknown method {st.method!r}")


def update(st: ConfSeqState, y: float) -> ConfidenceInterval:
    """Consume one observation and return the current interval."""
    L, U = st.support
    y = float(y)
    if not L <= y <= U:
        raise DomainError(f"observation {y!r} outside support ({L}, {U})")
    st.n += 1
    st.sum += y
    if st.method == A_BENTKUS:
        st.var_state.push(y)
        ci = _a_bentkus_step(st)
    else:
        # centre the second moment at L so the running sums stay well scaled
        d = y - L
        st.sumsq += d * d
        r = _baseline_radius(st) / st.n
        ybar = st.sum / st.n
        raw_lo, raw_up = ybar - r, ybar + r
        ci = ConfidenceInterval(st.n, max(raw_lo, L), min(raw_up, U),
                                raw_lo, raw_up, st.delta)
    st.last = ci
    return ci
