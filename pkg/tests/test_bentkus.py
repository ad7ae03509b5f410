import math
import threading

import numpy as np
import pytest

from bentkus_cs._kernels import p2_quantile_offset
from bentkus_cs.bentkus import (
    BentkusParams,
    QuantileCache,
    bentkus_quantile,
    bentkus_tail,
    bracket_quantile,
    floor_std,
    p2_binomial,
    p2_quantile_binomial,
    psi_breakpoints,
    quantile_saturated,
    solve_p2_quantile,
)
from bentkus_cs.binom import BinomialTable, binom_tail, tail_loglinear
from bentkus_cs.errors import DomainError
from bentkus_cs.confseq import bernstein_bound, hoeffding_bound
from oracles import chernoff_two_point, p2_bruteforce

# P_2 at x = 1.8 for Bi(2, 1/2): (1.125 - 1) / (2.43 - 3.6 + 1.5) = 25/66
D18 = 25 / 66


class TestParams:
    def test_p_ab(self):
        assert BentkusParams(1.0, 1.0).p_AB == 0.5
        assert BentkusParams(0.0, 2.0).p_AB == 0.0
        assert BentkusParams(math.sqrt(3) / 4, 0.75).p_AB == pytest.approx(0.25)

    @pytest.mark.parametrize("A,B", [(1.0, 0.0), (1.0, -1.0), (-0.1, 1.0), (math.nan, 1.0)])
    def test_invalid(self, A, B):
        with pytest.raises(DomainError):
            BentkusParams(A, B)

    def test_floor(self):
        assert floor_std(0.0, 2.0) == 2e-12
        assert floor_std(0.3, 2.0) == 0.3


class TestBreakpoints:
    def test_n2(self):
        bp = psi_breakpoints(BinomialTable(2, 0.5))
        assert bp.psi == pytest.approx([1.5, 2.0], rel=1e-15)

    @pytest.mark.parametrize("p", [0.01, 0.2, 0.5, 0.99])
    def test_last_is_n_first_closed_form(self, p):
        for n in (3, 10, 257):
            bp = psi_breakpoints(BinomialTable(n, p))
            assert bp.psi[-1] == n
            assert bp.psi[0] == pytest.approx(n * p + 1 - p, rel=1e-14)
            assert np.all(np.diff(bp.psi) >= 0)
            assert np.all(np.diff(bp.log_p2) <= 0)

    def test_matches_raw_formula(self):
        t = BinomialTable(10, 0.2)
        bp = psi_breakpoints(t)
        for k in range(10):
            raw = (t.v[k] - k * t.e[k]) / (t.e[k] - k * t.tail[k])
            assert bp.psi[k] == pytest.approx(raw, rel=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(DomainError):
            psi_breakpoints(BinomialTable(4, 0.0))


class TestP2:
    def test_hand_values(self):
        t = BinomialTable(2, 0.5)
        assert p2_binomial(1.0, t) == 1.0
        assert p2_binomial(1.4, t) == pytest.approx(0.5 / 0.66, rel=1e-14)
        assert p2_binomial(1.8, t) == pytest.approx(D18, rel=1e-14)
        assert p2_binomial(2.0, t) == 0.25
        assert p2_binomial(2.0001, t) == 0.0
        assert p2_binomial(-3.0, t) == 1.0

    def test_grid_oracle_hand_values(self):
        assert p2_bruteforce(1.4, 2, 0.5) == pytest.approx(0.5 / 0.66, abs=1e-9)
        assert p2_bruteforce(1.8, 2, 0.5) == pytest.approx(D18, abs=1e-9)

    def test_branch_formula_matches_moments(self):
        # rational branch written in the raw (p_k, e_k, v_k) form
        t = BinomialTable(9, 0.35)
        bp = psi_breakpoints(t)
        for k in range(1, 9):
            x = 0.5 * (bp.psi[k - 1] + bp.psi[k])
            pk, ek, vk = t.tail[k], t.e[k], t.v[k]
            raw = (vk * pk - ek * ek) / (x * x * pk - 2 * x * ek + vk)
            assert p2_binomial(x, t) == pytest.approx(raw, rel=1e-10)

    def test_continuity_at_breakpoints(self):
        t = BinomialTable(40, 0.3)
        bp = psi_breakpoints(t)
        for k in range(39):
            x = bp.psi[k]
            left, right = p2_binomial(x * (1 - 1e-10), t), p2_binomial(x * (1 + 1e-10), t)
            assert left == pytest.approx(right, rel=1e-7)
            assert math.log(p2_binomial(x, t)) == pytest.approx(bp.log_p2[k], abs=1e-9)

    def test_degenerate_laws(self):
        t0 = BinomialTable(5, 0.0)
        assert p2_binomial(0.0, t0) == 1.0
        assert p2_binomial(0.1, t0) == 0.0
        t1 = BinomialTable(5, 1.0)
        assert p2_binomial(5.0, t1) == 1.0
        assert p2_binomial(5.1, t1) == 0.0

    @pytest.mark.parametrize("n", [1, 3, 7, 12])
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.9])
    def test_bruteforce(self, n, p):
        t = BinomialTable(n, p)
        for x in np.linspace(-0.5, n + 0.5, 41):
            assert abs(p2_binomial(x, t) - p2_bruteforce(x, n, p)) <= 1e-6

    def test_sandwich(self):
        for n, p in [(5, 0.3), (30, 0.1), (200, 0.6)]:
            t = BinomialTable(n, p)
            for x in np.linspace(0, n, 301):
                v = p2_binomial(x, t)
                assert binom_tail(t, math.ceil(x)) <= v + 1e-10
                assert v <= math.exp(2) / 2 * tail_loglinear(t, x) + 1e-10


class TestQuantile:
    def test_hand_values(self):
        t = BinomialTable(2, 0.5)
        assert p2_quantile_binomial(1.0, t) == 1.0
        assert p2_quantile_binomial(D18, t) == pytest.approx(1.8, rel=1e-13)
        assert p2_quantile_binomial(0.25, t) == 2.0

    def test_saturation_flag(self):
        t = BinomialTable(2, 0.5)
        assert solve_p2_quantile(0.25, t).saturated is False
        sol = solve_p2_quantile(0.1, t)
        assert sol.x == 2.0 and sol.saturated

    def test_quadratic_branch_closed_form(self):
        t = BinomialTable(50, 0.2)
        d = 0.95  # x stays below the first breakpoint np + 1 - p = 10.8
        expect = 10 + math.sqrt((1 - d) * 50 * 0.2 * 0.8 / d)
        assert p2_quantile_binomial(d, t) == pytest.approx(expect, rel=1e-14)

    @pytest.mark.parametrize("d", [0.0, -0.1, 1.5, math.nan])
    def test_domain(self, d):
        with pytest.raises(DomainError):
            p2_quantile_binomial(d, BinomialTable(3, 0.5))

    def test_bracket(self):
        t = BinomialTable(2, 0.5)
        assert bracket_quantile(1.0, t)[0] == 0
        assert bracket_quantile(0.3, t)[0] == 1
        assert bracket_quantile(1e-3, t)[1] == 2

    def test_bracket_contains_quantile(self):
        for n, p in [(20, 0.3), (500, 0.05), (3000, 0.5)]:
            t = BinomialTable(n, p)
            for d in np.geomspace(max(p**n, 1e-300) * 10, 1, 25):
                k1, k2 = bracket_quantile(d, t)
                sol = solve_p2_quantile(d, t)
                assert k1 <= sol.x + 1e-9
                assert sol.x <= k2 + 1e-9
                assert sol.branch <= k2

    def test_fast_route_matches_table(self):
        for n in (1, 2, 10, 333, 5000):
            for p in (0.999, 0.5, 0.1, 1e-3, 1e-6):
                t = BinomialTable(n, p)
                for d in np.geomspace(1e-14, 1, 30):
                    if math.log(d) <= n * math.log(p) + 1e-9:
                        continue
                    x = p2_quantile_binomial(d, t)
                    fast = n * p + p2_quantile_offset(n, p, math.log(d))
                    assert fast == pytest.approx(x, rel=1e-10, abs=1e-12)


class TestSumScale:
    def test_tail_values(self):
        P = BentkusParams(1.0, 1.0)
        assert bentkus_tail(0.0, 2, P) == 1.0
        assert bentkus_tail(2.0, 2, P) == 0.25
        # u = 0.8 maps to x = 1 + 0.8 * 0.5 = 1.4, on the quadratic branch
        assert bentkus_tail(0.8, 2, P) == pytest.approx(0.5 / 0.66, rel=1e-14)
        assert bentkus_tail(1.6, 2, P) == pytest.approx(D18, rel=1e-14)

    def test_tail_rejects_zero_std(self):
        with pytest.raises(DomainError):
            bentkus_tail(0.1, 3, BentkusParams(0.0, 1.0))

    def test_quantile_values(self):
        P = BentkusParams(1.0, 1.0)
        assert bentkus_quantile(1.0, 2, P) == 0.0
        assert bentkus_quantile(D18, 2, P) == pytest.approx(1.6, rel=1e-10)
        assert bentkus_quantile(0.25, 2, P) == 2.0
        assert bentkus_quantile(1e-9, 2, P) == 3.0
        assert quantile_saturated(1e-9, 2, P)
        assert not quantile_saturated(0.25, 2, P)

    def test_quantile_inverts_tail(self):
        P = BentkusParams(0.3, 0.9)
        for n in (1, 5, 80, 2000):
            for d in (0.5, 0.05, 1e-4):
                if quantile_saturated(d, n, P):
                    continue
                q = bentkus_quantile(d, n, P)
                assert bentkus_tail(q, n, P) == pytest.approx(d, rel=1e-8)

    @pytest.mark.parametrize("d", [0.0, 1.01])
    def test_domain(self, d):
        with pytest.raises(DomainError):
            bentkus_quantile(d, 4, BentkusParams(1.0, 1.0))
        with pytest.raises(DomainError):
            bentkus_quantile(0.1, 0, BentkusParams(1.0, 1.0))

    def test_rejects_zero_std(self):
        with pytest.raises(DomainError):
            bentkus_quantile(0.1, 3, BentkusParams(0.0, 1.0))


class TestCache:
    def test_hit_is_bit_exact(self):
        cache = QuantileCache()
        P = BentkusParams(0.2, 0.7)
        a = bentkus_quantile(0.0123456789, 300, P, cache=cache)
        b = bentkus_quantile(0.0123456789, 300, P, cache=cache)
        fresh = bentkus_quantile(0.0123456789, 300, P, cache=None)
        assert a == b == fresh
        assert cache.hits == 1 and cache.misses == 1

    def test_quantized_key(self):
        cache = QuantileCache()
        P = BentkusParams(0.2, 0.7)
        bentkus_quantile(0.01, 50, P, cache=cache)
        bentkus_quantile(0.01 * (1 + 1e-15), 50, P, cache=cache)
        assert len(cache) == 1 and cache.hits == 1

    def test_lru_eviction(self):
        cache = QuantileCache(maxsize=3)
        P = BentkusParams(0.2, 0.7)
        for n in range(1, 6):
            bentkus_quantile(0.05, n, P, cache=cache)
        assert len(cache) == 3
        assert cache.get((1, 0.05, 0.2, 0.7)) is None
        assert cache.get((5, 0.05, 0.2, 0.7)) is not None

    def test_concurrent_use(self):
        cache = QuantileCache(maxsize=64)
        P = BentkusParams(0.3, 1.0)
        ref = {n: bentkus_quantile(0.01, n, P, cache=None) for n in range(1, 200)}
        errors = []

        def work(offset):
            for i in range(600):
                n = (i * 7 + offset) % 199 + 1
                if bentkus_quantile(0.01, n, P, cache=cache) != ref[n]:
                    errors.append(n)

        threads = [threading.Thread(target=work, args=(o,)) for o in range(6)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert not errors


GRID = [(n, A, B, d)
        for n in (3, 10, 50, 400, 3000)
        for A, B in ((0.5, 1.0), (0.1, 1.0), (0.9, 0.5), (1.0, 3.0))
        for d in (0.2, 0.05, 1e-3, 1e-6)]


def _unsaturated(n, P, d):
    return math.log(d) > n * math.log(P.p_AB) + 1e-9


class TestDominance:
    def test_tail_below_chernoff(self):
        for n, A, B, _ in GRID:
            P = BentkusParams(A, B)
            for u in np.linspace(0.0, n * B, 13)[1:]:
                assert bentkus_tail(u, n, P) <= chernoff_two_point(u, n, A, B) * (1 + 1e-9)

    def test_quantile_below_bernstein_and_hoeffding(self):
        checked = 0
        for n, A, B, d in GRID:
            P = BentkusParams(A, B)
            if not _unsaturated(n, P, d):
                continue
            checked += 1
            q = bentkus_quantile(d, n, P, cache=None)
            assert q <= bernstein_bound(n, d, A, B) * (1 + 1e-12)
            assert q <= hoeffding_bound(n, d, (-A * A / B, B)) * (1 + 1e-12)
        assert checked > 60

    def test_homogeneity(self):
        for n, A, B, d in GRID[::3]:
            P = BentkusParams(A, B)
            if not _unsaturated(n, P, d):
                continue  # the saturated value nB + 1 is not scale-free
            base = bentkus_quantile(d, n, P, cache=None)
            for s in (1e-3, 7.0):
                scaled = bentkus_quantile(d, n, BentkusParams(s * A, s * B), cache=None)
                assert scaled == pytest.approx(s * base, rel=1e-9)

    def test_monotone_in_std(self):
        for n in (5, 100, 2000):
            qs = [bentkus_quantile(0.01, n, BentkusParams(a, 1.0), cache=None)
                  for a in np.linspace(0.05, 1.0, 20)]
            assert np.all(np.diff(qs) >= -1e-12 * n)

    def test_monotone_in_delta(self):
        P = BentkusParams(0.4, 1.0)
        qs = [bentkus_quantile(d, 200, P, cache=None) for d in np.geomspace(1e-12, 1, 40)]
        assert np.all(np.diff(qs) <= 1e-12)
