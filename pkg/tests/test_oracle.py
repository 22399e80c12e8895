import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from divrate.approx import FactorialCoeffs, drop_zero_degree, gl_coefficients, remez_xlogx, rescale_gamma
from divrate.distributions import (BoundedRatioPair, DiscreteDistribution, InvalidParameterError, make_uniform,
                                   make_worst_case_pair, make_worst_case_pair_bias_I, rng_from_seed,
                                   sample_histogram, sample_poissonized)
from divrate.estimators import EstimatorConfig, aplugin_kl, opt_kl, plugin_kl
from divrate.oracle import (EnumerationTooLarge, brute_force_moments, exact_estimator_moments,
                            exact_gl_expectation, n_compositions, rate_aplugin, rate_minimax)


def pair(p, q, f):
    return BoundedRatioPair(DiscreteDistribution(p), DiscreteDistribution(q), f)


SMALL_PAIRS = [
    pair([0.5, 0.5], [0.5, 0.5], 1.0),
    pair([0.7, 0.3], [0.5, 0.5], 1.4),
    pair([0.125, 0.875], [0.0625, 0.9375], 2.0),
]


class TestRates:
    def test_aplugin_example(self):
        r = rate_aplugin(100, 1000, 10_000, 10)
        assert r.bias_sq_term == pytest.approx(0.04, rel=1e-12)
        assert r.variance_m_term == pytest.approx(math.log(10) ** 2 / 1000, rel=1e-12)
        assert r.total == pytest.approx(0.0463019, abs=1e-7)

    def test_minimax_example(self):
        r = rate_minimax(100, 1000, 10_000, 10)
        assert r.bias_sq_term == pytest.approx((0.2 / math.log(100)) ** 2, rel=1e-12)
        # 0.0018861 + 0.0053019 + 0.001 rounds to 0.0081880
        assert r.total == pytest.approx(0.0081880, abs=1e-7)

    def test_f_one(self):
        assert rate_aplugin(50, 10, 10, 1).variance_m_term == 0.0

    def test_doubling_quarters_bias(self):
        a = rate_aplugin(100, 300, 700, 1).bias_sq_term
        b = rate_aplugin(100, 600, 1400, 1).bias_sq_term
        assert b == pytest.approx(a / 4, rel=1e-14)

    def test_entropy_limit(self):
        r = rate_minimax(1000, 500, 1e300, 1)
        assert r.bias_sq_term == pytest.approx((1000 / (500 * math.log(1000))) ** 2, rel=1e-12)

    @given(st.integers(2, 10**6), st.floats(1, 1e6), st.floats(1, 1e6), st.floats(1, 100))
    def test_identity(self, k, m, n, f):
        a = rate_aplugin(k, m, n, f)
        b = rate_minimax(k, m, n, f)
        assert b.bias_sq_term * math.log(k) ** 2 == pytest.approx(a.bias_sq_term, rel=1e-12)
        assert min(a.bias_sq_term, a.variance_m_term, a.variance_n_term) >= 0
        if k >= 3:
            assert b.bias_sq_term <= a.bias_sq_term

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            rate_minimax(1, 10, 10, 2)
        with pytest.raises(InvalidParameterError):
            rate_aplugin(10, 0, 10, 2)


class TestGlExpectation:
    def test_degree_one_constant(self):
        k, n = math.exp(math.e), 100
        fc = gl_coefficients(drop_zero_degree(rescale_gamma(remez_xlogx(1), n, k, 1.0)), n, k, 1.0)
        for q in (1e-4, 0.01, 0.3):
            assert exact_gl_expectation(fc, q, n) == pytest.approx(math.log(math.e / n), rel=1e-12)

    @pytest.mark.parametrize("nq", [0.1, 3.0, 40.0])
    def test_first_factorial_moment(self, nq):
        fc = FactorialCoeffs([0.0, 2.5], 0.0)
        assert exact_gl_expectation(fc, nq / 100, 100) == pytest.approx(2.5 * nq, rel=1e-12)

    @pytest.mark.parametrize("nq", [0.1, 3.0, 40.0])
    def test_second_factorial_moment(self, nq):
        fc = FactorialCoeffs([0.0, 0.0, -1.5], 0.0)
        assert exact_gl_expectation(fc, nq / 1000, 1000) == pytest.approx(-1.5 * nq ** 2, rel=1e-12)

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            exact_gl_expectation(FactorialCoeffs([1.0]), 0.0, 10)


class TestExactMoments:
    def test_truth_stub(self):
        pr = make_worst_case_pair(8, 4)
        mo = exact_estimator_moments(pr, 5, 5, "truth")
        assert mo.expectation == pytest.approx(pr.divergence(), rel=1e-15)
        assert mo.variance == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("pr", SMALL_PAIRS)
    @pytest.mark.parametrize("m,n", [(4, 4), (3, 7)])
    def test_factorized_matches_brute(self, pr, m, n):
        fast = exact_estimator_moments(pr, m, n, "aplugin")
        slow = brute_force_moments(pr, m, n, "aplugin")
        assert fast.expectation == pytest.approx(slow.expectation, abs=1e-13)
        assert fast.second_moment == pytest.approx(slow.second_moment, abs=1e-13)
        assert fast.truncation_mass_dropped < 1e-12

    def test_factorized_matches_brute_k3(self):
        pr = make_worst_case_pair(3, 2)
        fast = exact_estimator_moments(pr, 4, 5, "aplugin", EstimatorConfig(c=0.5))
        slow = brute_force_moments(pr, 4, 5, "aplugin", EstimatorConfig(c=0.5))
        assert fast.expectation == pytest.approx(slow.expectation, abs=1e-13)
        assert fast.second_moment == pytest.approx(slow.second_moment, abs=1e-13)

    def test_uniform_positive_bias(self):
        mo = exact_estimator_moments(SMALL_PAIRS[0], 4, 4, "aplugin")
        assert mo.expectation > 0
        assert mo.second_moment >= mo.expectation ** 2

    def test_plugin_infinite_probability(self):
        pr = SMALL_PAIRS[2]
        mo = exact_estimator_moments(pr, 3, 3, "plugin")
        # a bin seen under P but absent under Q; with n=3 both Q bins cannot be empty at once
        p_inf = (1 - 0.875 ** 3) * 0.9375 ** 3 + (1 - 0.125 ** 3) * 0.0625 ** 3
        assert mo.infinite_probability == pytest.approx(p_inf, rel=1e-12)
        assert math.isfinite(mo.expectation)

    def test_guard(self):
        pr = make_uniform(12)
        with pytest.raises(EnumerationTooLarge) as err:
            exact_estimator_moments(BoundedRatioPair(pr, pr, 1.0), 30, 30, "opt")
        assert err.value.outcomes == n_compositions(30, 12) ** 2

    def test_plugin_poissonized_rejected(self):
        with pytest.raises(InvalidParameterError):
            exact_estimator_moments(SMALL_PAIRS[1], 4, 4, "plugin", sampling="poissonized")

    def test_bias_sign_small_instance(self):
        pr = make_worst_case_pair_bias_I(6, 10)
        mo = exact_estimator_moments(pr, 6, 600, "aplugin")
        assert mo.expectation - pr.divergence() > 0

    @pytest.mark.parametrize("est", ["aplugin", "opt"])
    def test_poisson_truncation_converges(self, est):
        pr = make_worst_case_pair(20, 3)
        a = exact_estimator_moments(pr, 40, 200, est, sampling="poissonized", tail=1e-14)
        b = exact_estimator_moments(pr, 40, 200, est, sampling="poissonized", tail=5e-15)
        assert abs(a.expectation - b.expectation) < 1e-10
        assert abs(a.second_moment - b.second_moment) < 1e-10
        assert a.truncation_mass_dropped < 1e-12


def _mc(fn, trials):
    vals = np.array([fn(i) for i in range(trials)])
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


class TestMonteCarloAgreement:
    @pytest.mark.parametrize("idx", range(3))
    def test_multinomial_aplugin(self, idx):
        pr = SMALL_PAIRS[idx]
        exact = exact_estimator_moments(pr, 4, 4, "aplugin").expectation
        rng = rng_from_seed(100 + idx)
        mean, se = _mc(lambda _: aplugin_kl(sample_histogram(pr.p, 4, rng), sample_histogram(pr.q, 4, rng)),
                       20_000)
        assert abs(mean - exact) < 3 * se

    def test_multinomial_opt_brute(self):
        pr = make_worst_case_pair(3, 2)
        exact = exact_estimator_moments(pr, 5, 6, "opt").expectation
        rng = rng_from_seed(7)
        mean, se = _mc(lambda _: opt_kl(sample_histogram(pr.p, 5, rng), sample_histogram(pr.q, 6, rng)).value,
                       20_000)
        assert abs(mean - exact) < 3 * se

    def test_multinomial_plugin_conditional(self):
        pr = SMALL_PAIRS[1]
        mo = exact_estimator_moments(pr, 4, 4, "plugin")
        rng = rng_from_seed(8)
        vals = np.array([plugin_kl(sample_histogram(pr.p, 4, rng), sample_histogram(pr.q, 4, rng))
                         for _ in range(20_000)])
        inf = np.isinf(vals)
        p_se = math.sqrt(mo.infinite_probability * (1 - mo.infinite_probability) / vals.size)
        assert abs(inf.mean() - mo.infinite_probability) < 3 * p_se
        fin = vals[~inf]
        assert abs(fin.mean() - mo.expectation) < 3 * fin.std(ddof=1) / math.sqrt(fin.size)

    @pytest.mark.parametrize("est", ["aplugin", "opt"])
    def test_poissonized(self, est):
        pr = make_worst_case_pair(6, 3)
        m, n = 15, 40
        exact = exact_estimator_moments(pr, m, n, est, sampling="poissonized").expectation
        rng = rng_from_seed(9)

        def one(_):
            M, N = sample_poissonized(pr.p, m, rng), sample_poissonized(pr.q, n, rng)
            return aplugin_kl(M, N) if est == "aplugin" else opt_kl(M, N).value

        mean, se = _mc(one, 20_000)
        assert abs(mean - exact) < 3 * se
