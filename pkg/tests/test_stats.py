import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nise import stats
from nise.errors import EmptyInput, InvalidDf, TooFewPoints, ZeroVariance

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def qn_all_pairs(x):
    """Independent oracle: enumerate every pair and take the k-th gap."""
    n = len(x)
    gaps = sorted(abs(a - b) for a, b in itertools.combinations(x, 2))
    h = n // 2 + 1
    k = h * (h - 1) // 2
    return 2.2219 * stats.qn_correction(n) * gaps[k - 1]


def chi2_sf_oracle(x, df):
    return float(mpmath.gammainc(df / 2, x / 2, mpmath.inf, regularized=True))


def f_sf_oracle(x, d1, d2):
    return float(mpmath.betainc(d2 / 2, d1 / 2, 0, d2 / (d2 + d1 * x), regularized=True))


class TestMedian:
    @pytest.mark.parametrize(
        "x, expected", [([5], 5.0), ([1, 2, 3, 4], 2.5), ([3, 1, 2], 2.0)]
    )
    def test_examples(self, x, expected):
        assert stats.median(x) == expected

    def test_empty(self):
        with pytest.raises(EmptyInput):
            stats.median([])

    @given(st.lists(finite, min_size=1, max_size=30), st.randoms())
    def test_permutation_invariant(self, x, rnd):
        y = list(x)
        rnd.shuffle(y)
        assert stats.median(x) == stats.median(y)


class TestQn:
    def test_constant(self):
        assert stats.qn_scale([7, 7, 7, 7]) == 0.0

    def test_one_to_five(self):
        # h = 3, k = 3; sorted gaps 1,1,1,1,2,... so the 3rd is 1; d_5 = 0.844
        assert stats.qn_scale([1, 2, 3, 4, 5]) == pytest.approx(2.2219 * 0.844, abs=1e-12)
        assert stats.qn_scale([1, 2, 3, 4, 5]) == pytest.approx(qn_all_pairs([1, 2, 3, 4, 5]), abs=1e-12)

    def test_correction_factors(self):
        assert stats.qn_correction(2) == 0.399
        assert stats.qn_correction(9) == 0.872
        assert stats.qn_correction(11) == pytest.approx(11 / 12.4)
        assert stats.qn_correction(10) == pytest.approx(10 / 13.8)

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            stats.qn_scale([1.0])
        with pytest.raises(EmptyInput):
            stats.qn_scale([])

    def test_normal_consistency(self):
        x = np.random.default_rng(0).standard_normal(10_000)
        assert abs(stats.qn_scale(x) - 1.0) < 0.05

    @pytest.mark.parametrize("n", [2, 3, 4, 7, 10, 33, 100, 257])
    def test_matches_all_pairs_oracle(self, n):
        x = np.random.default_rng(n).standard_normal(n).round(2)  # rounding forces ties
        assert stats.qn_scale(x) == pytest.approx(qn_all_pairs(list(x)), abs=1e-12)

    def test_large_sample_band_selection(self):
        # big enough that the bisection path runs before enumeration
        x = np.random.default_rng(1).standard_cauchy(1500)
        assert stats.qn_scale(x) == pytest.approx(qn_all_pairs(list(x)), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(finite, min_size=2, max_size=40), finite, st.floats(-100, 100).filter(lambda b: abs(b) > 1e-3))
    def test_affine_equivariance(self, x, a, b):
        x = np.array(x)
        lhs = stats.qn_scale(a + b * x)
        rhs = abs(b) * stats.qn_scale(x)
        # exact in real arithmetic; allow for rounding in a + b x
        assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(a) + abs(b) * np.max(np.abs(x))))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(finite, min_size=2, max_size=60))
    def test_property_matches_oracle(self, x):
        assert stats.qn_scale(x) == pytest.approx(qn_all_pairs(x), abs=1e-12)


class TestChiSquare:
    @pytest.mark.parametrize("df", [1, 2, 5, 30])
    def test_zero(self, df):
        assert stats.chi_square_sf(0.0, df) == 1.0

    def test_df2_closed_form(self):
        assert stats.chi_square_sf(4.9242, 2) == pytest.approx(math.exp(-2.4621), abs=1e-12)
        assert stats.chi_square_sf(4.9242, 2) == pytest.approx(0.085256, abs=1e-6)

    def test_five_percent_point(self):
        assert stats.chi_square_sf(7.815, 3) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("x", [0.01, 0.5, 3.0, 7.815, 20.0, 80.0])
    @pytest.mark.parametrize("df", [1, 2, 3, 7, 25])
    def test_incomplete_gamma_oracle(self, x, df):
        assert stats.chi_square_sf(x, df) == pytest.approx(chi2_sf_oracle(x, df), abs=1e-10)

    @pytest.mark.parametrize("df", [0, -1, 2.5, True])
    def test_invalid_df(self, df):
        with pytest.raises(InvalidDf):
            stats.chi_square_sf(1.0, df)

    @given(st.floats(0, 200), st.floats(0, 200), st.integers(1, 40))
    def test_monotone_and_bounded(self, x1, x2, df):
        lo, hi = sorted((x1, x2))
        p_lo, p_hi = stats.chi_square_sf(lo, df), stats.chi_square_sf(hi, df)
        assert 0.0 <= p_hi <= p_lo <= 1.0


class TestF:
    def test_zero(self):
        assert stats.f_sf(0.0, 3, 40) == 1.0

    @pytest.mark.parametrize("x", [0.2, 1.0, 4.0, 9.0])
    @pytest.mark.parametrize("df2", [5, 46, 493])
    def test_t_identity(self, x, df2):
        # two-sided Student-t tail at sqrt(x), by direct quadrature of the t density
        nu = df2
        dens = lambda t: mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2)) * (1 + t * t / nu) ** (-(nu + 1) / 2)
        tail = 2 * mpmath.quad(dens, [math.sqrt(x), mpmath.inf])
        assert stats.f_sf(x, 1, df2) == pytest.approx(float(tail), abs=1e-10)

    def test_five_percent_point(self):
        q95 = float(mpmath.findroot(lambda x: f_sf_oracle(x, 3, 40) - 0.05, 2.8))
        assert stats.f_sf(q95, 3, 40) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("x", [0.1, 1.0, 2.84, 10.0])
    @pytest.mark.parametrize("d1, d2", [(1, 10), (3, 40), (3, 493), (7, 12)])
    def test_incomplete_beta_oracle(self, x, d1, d2):
        assert stats.f_sf(x, d1, d2) == pytest.approx(f_sf_oracle(x, d1, d2), abs=1e-10)

    def test_invalid_df(self):
        with pytest.raises(InvalidDf):
            stats.f_sf(1.0, 0, 5)

    @given(st.floats(0, 100), st.floats(0, 100), st.integers(1, 10), st.integers(1, 200))
    def test_monotone_and_bounded(self, x1, x2, d1, d2):
        lo, hi = sorted((x1, x2))
        assert 0.0 <= stats.f_sf(hi, d1, d2) <= stats.f_sf(lo, d1, d2) <= 1.0


class TestPearson:
    def test_self_and_flip(self):
        x = np.array([0.3, 1.2, -0.7, 2.2])
        assert stats.pearson_corr(x, x) == pytest.approx(1.0)
        assert stats.pearson_corr(x, -x) == pytest.approx(-1.0)

    def test_hand_example(self):
        # cov = 1/3 * 1, sd_x = sqrt(2/3), sd_y = sqrt(2/9)  ->  r = sqrt(3)/2
        assert stats.pearson_corr([1, 2, 3], [2, 2, 3]) == pytest.approx(0.866025, abs=1e-6)
        assert stats.pearson_corr([1, 2, 3], [2, 2, 3]) == pytest.approx(math.sqrt(3) / 2, abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            stats.pearson_corr([1, 2, 3], [4, 4, 4])

    @settings(max_examples=50)
    @given(
        st.lists(st.tuples(finite, finite), min_size=3, max_size=20),
        st.floats(-50, 50), st.floats(0.01, 50), st.floats(-50, 50), st.floats(0.01, 50),
    )
    def test_affine_invariance(self, pairs, a, b, c, d):
        x, y = map(np.array, zip(*pairs))
        assume(np.std(x) > 1e-3 and np.std(y) > 1e-3)
        r = stats.pearson_corr(x, y)
        assert stats.pearson_corr(a + b * x, c + d * y) == pytest.approx(r, abs=1e-8)
