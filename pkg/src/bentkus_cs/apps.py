"""Sequential procedures driven by a confidence sequence.

``adaptive_stop`` samples until the mean is pinned down to relative accuracy
epsilon.  ``best_arm`` pulls the arm with the widest interval and eliminates
arms whose upper bound falls below the leader's lower bound.

Both take a *factory*: a callable mapping an error budget ``delta`` to a
fresh :class:`~bentkus_cs.confseq.ConfSeqState`.  :func:`confseq_factory`
builds one for a named method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .confseq import A_BENTKUS, ConfidenceInterval, ConfSeqState, make_confseq
from .errors import DomainError
from .stitching import StitchConfig

__all__ = [
    "confseq_factory",
    "StoppingResult",
    "adaptive_stop",
    "ArmState",
    "BanditResult",
    "best_arm",
    "hardness_h1",
]

Factory = Callable[[float], ConfSeqState]


def confseq_factory(method: str, support, eta: float = 1.1, power: float = 1.1,
                    **kwargs) -> Factory:
    """Factory for ``method`` that splits each requested budget two thirds /
    one third between boundary and variance."""
    def make(delta):
        cfg = StitchConfig.for_delta(delta, eta=eta, power=power)
        return make_confseq(method, support, delta, cfg, **kwargs)
    return make


def _symmetric_radius(seq: ConfSeqState, ci: ConfidenceInterval) -> float:
    """Half-width around the running mean.  A-Bentkus intervals are not
    centred at the mean, so take the larger deviation; baselines use the
    untruncated radius."""
    if seq.method == A_BENTKUS:
        ybar = seq.mean
        return max(ybar - ci.lower, ci.upper - ybar)
    return ci.raw_radius


@dataclass
class StoppingResult:
    stopping_time: int
    estimate: float
    truncated: bool
    lb: float
    ub: float
    trace: list = field(default_factory=list, repr=False)  # (n, LB, UB, Q)


def adaptive_stop(stream: Iterable[float], epsilon: float, delta: float,
                  factory: Factory, max_n: int = 10**7,
                  keep_trace: bool = True) -> StoppingResult:
    """Sample until ``(1 + eps) LB >= (1 - eps) UB`` where ``[LB, UB]`` is the
    running intersection of intervals for ``|mu|``.

    Stops early with ``truncated=True`` at ``max_n`` or when the stream runs out.
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    seq = factory(delta)
    it = iter(stream)
    lb, ub = 0.0, math.inf
    n = 0
    trace = []
    truncated = False
    while (1.0 + epsilon) * lb < (1.0 - epsilon) * ub:
        if n >= max_n:
            truncated = True
            break
        try:
            y = next(it)
        except StopIteration:
            truncated = True
            break
        n += 1
        ci = seq.update(y)
        q = _symmetric_radius(seq, ci)
        a = abs(seq.mean)
        lb = max(lb, a - q)
        ub = min(ub, a + q)
        if keep_trace:
            trace.append((n, lb, ub, q))
    ybar = seq.mean if n else 0.0
    sign = (ybar > 0) - (ybar < 0)
    est = 0.5 * sign * ((1.0 + epsilon) * lb + (1.0 - epsilon) * ub) if n else math.nan
    return StoppingResult(n, est, truncated, lb, ub, trace)


@dataclass
class ArmState:
    """One arm's rewards and confidence sequences, keyed by budget."""

    id: int
    rewards: list = field(default_factory=list, repr=False)
    seqs: dict = field(default_factory=dict, repr=False)
    budget: float = math.nan
    interval: tuple = (math.nan, math.nan)
    radius: float = math.inf

    @property
    def pulls(self) -> int:
        return len(self.rewards)

    @property
    def mean(self) -> float:
        return sum(self.rewards) / len(self.rewards) if self.rewards else math.nan

    def seq(self, delta: float, factory: Factory) -> ConfSeqState:
        s = self.seqs.get(delta)
        if s is None:
            # a budget not tracked so far: replay this arm's history
            s = factory(delta)
            for y in self.rewards:
                s.update(y)
            self.seqs[delta] = s
        return s


@dataclass
class BanditResult:
    winner: int
    total_pulls: int
    truncated: bool
    pulls: list
    pull_trace: list = field(default_factory=list, repr=False)  # (iteration, arm)
    elimination_trace: list = field(default_factory=list)  # (iteration, arm)


def hardness_h1(means: Sequence[float]) -> float:
    """``sum over non-best arms of (mu_a - mu_best)**-2``."""
    best = max(range(len(means)), key=lambda a: (means[a], -a))
    return sum((means[a] - means[best]) ** -2 for a in range(len(means)) if a != best)


def best_arm(arms: Sequence[Callable[[], float]], delta: float, factory: Factory,
             max_total_pulls: int = 10**7, radius: str = "raw",
             keep_trace: bool = True) -> BanditResult:
    """Fixed-confidence best-arm identification by interval elimination.

    Each iteration picks the empirical leader (ties to the lowest id), gives
    it budget ``delta / (2 (m - 1))`` for m active arms and every other arm
    ``delta / 2``, pulls the arm with the largest radius (ties to the smaller
    empirical mean, then the lowest id), then removes every arm whose upper
    bound lies below the leader's lower bound.

    ``radius="raw"`` measures A-Bentkus arms by half the gap between the
    one-step bounds and baselines by their untruncated radius, which keeps the
    radius moving while the reported interval is stuck at the support.
    ``radius="reported"`` uses the reported interval.
    """
    if len(arms) == 0:
        raise DomainError("need at least one arm")
    if radius not in ("raw", "reported"):
        raise DomainError(f"radius must be 'raw' or 'reported', got {radius!r}")
    K = len(arms)
    states = [ArmState(a) for a in range(K)]
    active = list(range(K))
    pull_trace, elim_trace = [], []
    total = 0
    it = 0
    midpoint = None

    def mu_hat(a):
        st = states[a]
        return st.mean if st.pulls else midpoint

    def refresh(a, leader, m):
        st = states[a]
        d = 0.5 * delta / (m - 1) if a == leader else 0.5 * delta
        st.budget = d
        seq = st.seq(d, factory)
        if st.pulls == 0:
            st.interval = seq.support
            st.radius = math.inf
            return
        ci = seq.interval()
        st.interval = (ci.lower, ci.upper)
        if radius == "reported":
            st.radius = ci.radius
        elif seq.method == A_BENTKUS:
            st.radius = 0.5 * (ci.raw_upper - ci.raw_lower)
        else:
            st.radius = ci.raw_radius

    while len(active) > 1:
        if total >= max_total_pulls:
            break
        it += 1
        m = len(active)
        if midpoint is None:
            L, U = factory(delta).support
            midpoint = 0.5 * (L + U)
        leader = max(active, key=lambda a: (mu_hat(a), -a))
        keep = {0.5 * delta, 0.5 * delta / (m - 1)}
        for a in active:
            st = states[a]
            for d in [d for d in st.seqs if d not in keep]:
                del st.seqs[d]
            refresh(a, leader, m)

        pick = min(active, key=lambda a: (-states[a].radius, mu_hat(a), a))
        y = arms[pick]()
        st = states[pick]
        st.rewards.append(y)
        for seq in st.seqs.values():
            seq.update(y)
        total += 1
        if keep_trace:
            pull_trace.append((it, pick))
        refresh(pick, leader, m)

        lead_lo = states[leader].interval[0]
        for a in list(active):
            if a != leader and states[a].interval[1] < lead_lo:
                active.remove(a)
                elim_trace.append((it, a))

    truncated = len(active) > 1
    if truncated:
        winner = max(active, key=lambda a: (mu_hat(a), -a))
    else:
        winner = active[0]
    return BanditResult(winner, total, truncated, [s.pulls for s in states],
                        pull_trace, elim_trace)
