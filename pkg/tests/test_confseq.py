import math

import numpy as np
import pytest

from bentkus_cs.confseq import (
    A_BENTKUS,
    A_HOEFFDING,
    ANYTIME_METHODS,
    BERNSTEIN,
    E_BERNSTEIN,
    HOEFFDING,
    METHODS,
    adaptive_hoeffding_bound,
    bernstein_bound,
    empirical_bernstein_bound,
    hoeffding_bound,
    make_confseq,
    update,
)
from bentkus_cs.errors import DomainError
from bentkus_cs.harness.rng import rng_stream
from bentkus_cs.stitching import StitchConfig, epoch


def bern(seed, n, p=0.1, *ids):
    return (rng_stream(seed, 77, *ids).random(n) < p).astype(float)


class TestClosedForms:
    def test_hoeffding(self):
        assert hoeffding_bound(1, math.exp(-2), (0, 1)) == pytest.approx(1.0, rel=1e-15)
        assert hoeffding_bound(100, 0.05, (0, 1)) == pytest.approx(math.sqrt(50 * math.log(20)))
        assert hoeffding_bound(100, 0.05, (0, 2)) == pytest.approx(
            2 * hoeffding_bound(100, 0.05, (0, 1)), rel=1e-15)

    def test_adaptive_hoeffding(self):
        expect = math.sqrt(0.6 * 100 * math.log(math.log(100) / math.log(1.1) + 1)
                           + 100 * math.log(240) / 1.8)
        assert adaptive_hoeffding_bound(100, 0.05, (0, 1)) == pytest.approx(expect, rel=1e-14)
        assert expect == pytest.approx(23.2, abs=0.05)
        assert adaptive_hoeffding_bound(1, 0.05, (0, 1)) == adaptive_hoeffding_bound(2, 0.05, (0, 1))
        assert adaptive_hoeffding_bound(100, 0.05, (-1, 2)) == pytest.approx(3 * expect, rel=1e-14)
        vals = np.array([adaptive_hoeffding_bound(n, 0.05, (0, 1)) for n in range(2, 100_001)])
        assert np.all(np.diff(vals) >= 0)

    def test_bernstein(self):
        assert bernstein_bound(100, 1.0, 0.3, 1.0) == 0.0
        ell = math.log(20)
        expect = math.sqrt(2 * 100 * 0.09 * ell + ell**2 / 9) + ell / 3
        assert bernstein_bound(100, 0.05, 0.3, 1.0) == pytest.approx(expect, rel=1e-15)

    def test_empirical_bernstein(self):
        cfg = StitchConfig()
        k, _ = epoch(100, 1.1)
        ell = math.log(3 * cfg.h(k) / (2 * 0.05))
        assert empirical_bernstein_bound(100, 0.05, 0.0, 1.0, cfg) == pytest.approx(
            3 * 1.1 * ell, rel=1e-14)
        expect = math.sqrt(2 * 100 * 1.1 * 0.09 * ell) + 3 * 1.1 * ell
        assert empirical_bernstein_bound(100, 0.05, 0.09, 1.0, cfg) == pytest.approx(expect, rel=1e-14)
        # the budget term is constant inside an epoch
        a = empirical_bernstein_bound(98, 0.05, 0.0, 1.0, cfg)
        assert epoch(98, 1.1) == epoch(100, 1.1)
        assert a == empirical_bernstein_bound(100, 0.05, 0.0, 1.0, cfg)


class TestMake:
    @pytest.mark.parametrize("method", METHODS)
    def test_starts_at_support(self, method):
        st = make_confseq(method, (-2, 3), 0.05, known_std=1.0)
        ci = st.interval()
        assert (ci.n, ci.lower, ci.upper) == (0, -2.0, 3.0)

    def test_default_budget_split(self):
        st = make_confseq(A_BENTKUS, (0, 1), 0.09)
        assert st.cfg.delta1 == pytest.approx(0.06) and st.cfg.delta2 == pytest.approx(0.03)

    @pytest.mark.parametrize("kw", [dict(support=(1, 0)), dict(support=(1, 1)),
                                    dict(delta=0.0), dict(delta=1.0),
                                    dict(method="Bentkus")])
    def test_invalid(self, kw):
        args = dict(method=A_BENTKUS, support=(0, 1), delta=0.05) | kw
        with pytest.raises(DomainError):
            make_confseq(**args)

    def test_bernstein_needs_std(self):
        with pytest.raises(DomainError):
            make_confseq(BERNSTEIN, (0, 1), 0.05)


class TestUpdate:
    @pytest.mark.parametrize("method", METHODS)
    def test_rejects_outside_support(self, method):
        st = make_confseq(method, (0, 1), 0.05, known_std=0.5)
        with pytest.raises(DomainError):
            update(st, 1.5)
        with pytest.raises(DomainError):
            update(st, math.nan)
        assert st.n == 0

    @pytest.mark.parametrize("method", METHODS)
    def test_constant_stream_covered(self, method):
        st = make_confseq(method, (0, 1), 0.05, known_std=1e-3)
        for _ in range(3000):
            ci = update(st, 0.37)
            assert ci.contains(0.37)

    @pytest.mark.parametrize("method", METHODS)
    def test_interval_inside_support(self, method):
        st = make_confseq(method, (0, 1), 0.05, known_std=0.3)
        for y in bern(1, 2000):
            ci = update(st, y)
            assert 0.0 <= ci.lower <= ci.upper <= 1.0
            assert ci.n == st.n
        assert isinstance(ci.lower, float) and isinstance(ci.upper, float)

    def test_baseline_raw_endpoints_untruncated(self):
        st = make_confseq(HOEFFDING, (0, 1), 0.05)
        ci = update(st, 0.0)
        assert ci.raw_lower < 0.0 and ci.lower == 0.0
        assert ci.raw_radius > ci.radius

    def test_a_bentkus_nested(self):
        st = make_confseq(A_BENTKUS, (0, 1), 0.05)
        lo, up = 0.0, 1.0
        for y in bern(2, 5000):
            ci = update(st, y)
            assert lo <= ci.lower <= ci.upper <= up
            assert ci.lower == max(lo, ci.raw_lower) or ci.empty
            lo, up = ci.lower, ci.upper

    def test_scale_equivariance(self):
        a, b = 3.7, -1.25
        x = bern(3, 3000, 0.3)
        s1 = make_confseq(A_BENTKUS, (0, 1), 0.05)
        s2 = make_confseq(A_BENTKUS, (b, a + b), 0.05)
        for y in x:
            c1, c2 = update(s1, y), update(s2, a * y + b)
            assert c2.lower == pytest.approx(a * c1.lower + b, abs=1e-9)
            assert c2.upper == pytest.approx(a * c1.upper + b, abs=1e-9)

    def test_width_dominates_empirical_bernstein_from_twenty(self):
        for seed in range(3):
            x = bern(seed, 20000)
            s1 = make_confseq(A_BENTKUS, (0, 1), 0.05)
            s2 = make_confseq(E_BERNSTEIN, (0, 1), 0.05)
            for n, y in enumerate(x, 1):
                c1, c2 = update(s1, y), update(s2, y)
                if n >= 20:
                    assert c1.upper - c1.lower <= c2.upper - c2.lower

    def test_state_update_method(self):
        st = make_confseq(A_HOEFFDING, (0, 1), 0.05)
        ci = st.update(1)
        assert st.interval() is ci and st.mean == 1.0


@pytest.mark.parametrize("p", [0.1, 0.5])
def test_anytime_coverage_monte_carlo(p):
    reps, horizon = 300, 5000
    misses = {m: 0 for m in ANYTIME_METHODS}
    for rep in range(reps):
        x = bern(40, horizon, p, rep)
        for m in ANYTIME_METHODS:
            st = make_confseq(m, (0, 1), 0.05)
            for y in x:
                if not update(st, y).contains(p):
                    misses[m] += 1
                    break
    for m, k in misses.items():
        assert k / reps <= 0.05, m


def test_fixed_methods_listed_separately():
    assert set(ANYTIME_METHODS) | {HOEFFDING, BERNSTEIN} == set(METHODS)
    assert A_HOEFFDING in ANYTIME_METHODS
