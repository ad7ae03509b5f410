"""Compiled inner loop for the Bentkus quantile.

Falls back to plain Python when numba is unavailable; results are identical,
only slower.
"""
import math

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def p2_quantile_offset(n, p, log_delta):
    """Return ``x - n p`` where ``P_2(x; Bi(n, p)) = exp(log_delta)``.

    Caller guarantees ``0 < p < 1`` and ``p**n < delta <= 1``.

    Scans branches from the top of the support downwards, accumulating the
    centred truncated moments with every term scaled by the modal pmf.  The
    scan starts where the pmf has dropped below ``1e-25 * delta / n**2`` and
    stops at the first branch whose breakpoint value ``m1^2 / m2`` exceeds
    delta, so its cost is the width of the window between the quantile and the
    numerically relevant end of the tail rather than ``n``.
    """
    delta = math.exp(log_delta)
    mean = n * p
    var = mean * (1.0 - p)
    if log_delta >= math.log(mean) - math.log(1.0 - p + mean):
        return math.sqrt(var * (1.0 - delta) / delta)

    ratio = p / (1.0 - p)
    mode = int(math.floor((n + 1) * p))
    if mode > n:
        mode = n
    log_fmode = (math.lgamma(n + 1.0) - math.lgamma(mode + 1.0)
                 - math.lgamma(n - mode + 1.0)
                 + mode * math.log(p) + (n - mode) * math.log1p(-p))
    f_mode = math.exp(log_fmode)
    cut = 1e-25 * delta / (n * n + 1.0) / f_mode
    if cut < 1e-300:
        cut = 1e-300

    k = mode
    ft = 1.0
    while k < n and ft >= cut:
        ft *= (n - k) / (k + 1.0) * ratio
        k += 1
    hi = k

    # sums at k = hi, tail beyond hi dropped
    big_p = ft
    m1 = 0.0
    m2 = 0.0
    nv = 0.0
    kb = hi
    bp, bm1, bnv = big_p, m1, nv
    k = hi - 1
    while k >= 1:
        ft = ft / ((n - k) / (k + 1.0) * ratio)
        m2 = m2 + 2.0 * m1 + big_p
        m1 = m1 + big_p
        big_p = big_p + ft
        nv = nv + ft * m2
        if m2 > 0.0 and f_mode * m1 * m1 > delta * m2:
            break
        kb = k
        bp, bm1, bnv = big_p, m1, nv
        k -= 1

    mu_c = bm1 / bp
    sig2 = bnv / (bp * bp)
    excess = f_mode * bp / delta - 1.0
    if excess < 0.0:
        excess = 0.0
    return kb + mu_c + math.sqrt(sig2 * excess) - mean
