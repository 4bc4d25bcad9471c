"""Solver tests against independent high-precision and enumeration oracles."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfqkd.bounds import (
    DomainError,
    baseline_curty,
    baseline_gaussian,
    baseline_sampling_analytic,
    baseline_sampling_fung,
    chernoff_delta_lower,
    chernoff_delta_upper,
    expected_lower,
    expected_upper,
    ln_binomial,
    sampling_gamma_lower,
    sampling_gamma_upper,
)
from tfqkd.oracles import HypergeomScenario, binomial_tail_exact, hypergeom_log_pmf

mp.mp.dps = 40


class TestLnBinomial:
    def test_integer_cases(self):
        assert ln_binomial(4, 2) == pytest.approx(math.log(6), abs=1e-12)
        for n in (0, 1, 5, 1000):
            assert ln_binomial(n, 0) == pytest.approx(0.0, abs=1e-12)

    def test_against_high_precision_gamma(self):
        # Independent route: mpmath log-gamma at 40 digits.
        expected = float(mp.loggamma(1001) - mp.loggamma(138.5) - mp.loggamma(863.5))
        assert ln_binomial(1000, 137.5) == pytest.approx(expected, rel=1e-10)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            ln_binomial(10, -0.5)
        with pytest.raises(DomainError):
            ln_binomial(10, 10.5)


def _worst_joint_mass(n, k, j, gamma, tail):
    """Max over totals of the joint mass Pr[observe j ones and deviate]."""
    lam = j / k
    worst = 0.0
    for t in range(j, j + n + 1):
        _, log_pmf = hypergeom_log_pmf(HypergeomScenario(n, k, t))
        jj = np.arange(max(0, t - n), min(k, t) + 1)
        idx = np.where(jj == j)[0]
        if idx.size == 0:
            continue
        lam_n = (t - j) / n
        hit = lam_n >= lam + gamma if tail == "upper" else lam_n <= lam - gamma
        if hit:
            worst = max(worst, float(np.exp(log_pmf[idx[0]])))
    return worst


class TestSamplingGamma:
    def test_lambda_one_is_vacuous(self):
        # No failure probability <= eps exists at lambda_k = 1; the returned
        # offset renders the tail event empty (it exceeds the cap by the
        # half-grid-step margin).
        sol = sampling_gamma_upper(100, 100, 1.0, 1e-3)
        assert sol.clamped
        assert 0.0 < sol.value <= 0.5 / 100

    def test_upper_validated_by_enumeration(self):
        n = k = 100
        eps = 1e-3
        for j in (0, 10, 37):
            sol = sampling_gamma_upper(n, k, j / k, eps)
            mass = _worst_joint_mass(n, k, j, sol.value, "upper")
            assert mass <= eps * (1 + 1e-9)

    def test_lower_validated_by_enumeration(self):
        n = k = 100
        eps = 1e-3
        sol = sampling_gamma_lower(n, k, 0.1, eps)
        assert sol is not None and sol.converged
        mass = _worst_joint_mass(n, k, 10, sol.value, "lower")
        assert mass <= eps * (1 + 1e-9)

    def test_lower_no_root_at_zero_rate(self):
        assert sampling_gamma_lower(100, 100, 0.0, 1e-3) is None

    def test_lower_large_strings_stay_positive(self):
        sol = sampling_gamma_lower(1e6, 1e6, 0.15, 1e-10)
        assert sol is not None
        assert 0.15 - sol.value > 0.0

    def test_residuals_at_small_scale(self):
        # The equation is a difference of log-gamma terms, so the residual
        # measurement floor is their magnitude times machine epsilon; 1e-12
        # is expressible up to a few hundred bits of string.
        for n, k, lam, eps in [
            (100, 60, 0.05, 1e-6),
            (150, 30, 0.2, 1e-10),
            (120, 120, 0.15, 1e-10),
        ]:
            sol = sampling_gamma_upper(n, k, lam, eps)
            assert not sol.clamped
            assert abs(sol.residual) <= 1e-12

    def test_residual_noise_floor_at_larger_scale(self):
        for n, k, lam, eps in [(2000, 100, 0.2, 1e-10), (10000, 10000, 0.15, 1e-10)]:
            sol = sampling_gamma_upper(n, k, lam, eps)
            floor = math.lgamma(n + k + 1.0) * 2.220446049250313e-16
            assert abs(sol.residual) <= 100.0 * max(floor, 1e-14)

    def test_gamma_nonincreasing_in_k(self):
        values = [sampling_gamma_upper(1e4, k, 0.1, 1e-6).value for k in (10, 100, 1000, 10000)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_tighter_than_entropy_form(self):
        # The exact root never exceeds the entropy-form or analytic bounds.
        for k in np.logspace(3, 7, 9):
            exact = sampling_gamma_upper(1e6, k, 0.15, 1e-10).value
            fung = baseline_sampling_fung(1e6, k, 0.15, 1e-10).value
            assert exact <= fung + 1e-12


class TestChernoff:
    def test_upper_validated_by_exact_binomial(self):
        sol = chernoff_delta_upper(100.0, 1e-10)
        tail = binomial_tail_exact(1000, 0.1, (1 + sol.value) * 100.0, "upper")
        assert tail < 1e-10

    def test_lower_validated_by_exact_binomial(self):
        sol = chernoff_delta_lower(100.0, 1e-10)
        assert not sol.clamped
        tail = binomial_tail_exact(1000, 0.1, (1 - sol.value) * 100.0, "lower")
        assert tail < 1e-10

    def test_fluctuation_shrinks_with_mean(self):
        assert chernoff_delta_upper(10.0, 1e-3).value > chernoff_delta_upper(100.0, 1e-3).value

    def test_vacuous_eps_limit(self):
        assert chernoff_delta_upper(100.0, 1.0 - 1e-9).value < 1e-4

    def test_lower_boundary_root(self):
        # mu = 23.0259 sits just above ln(1e10), so the root is 1 to ~1e-7.
        sol = chernoff_delta_lower(23.0259, 1e-10)
        assert sol.value == pytest.approx(1.0, abs=1e-5)
        assert not sol.clamped

    def test_lower_clamps_below_threshold(self):
        sol = chernoff_delta_lower(20.0, 1e-10)
        assert sol.clamped and sol.value == 1.0

    def test_lower_large_mean_is_small(self):
        assert chernoff_delta_lower(1e6, 1e-10).value < 0.01

    def test_residuals(self):
        for mu in (1.0, 10.0, 100.0, 1e4):
            for eps in (1e-2, 1e-10):
                assert abs(chernoff_delta_upper(mu, eps).residual) <= 1e-12
                sol = chernoff_delta_lower(mu, eps)
                if not sol.clamped:
                    assert abs(sol.residual) <= 1e-12


class TestExpectedValueBounds:
    def test_zero_count_values(self):
        assert expected_lower(0.0, 1e-10) == 0.0
        assert expected_upper(0.0, 1e-10) == pytest.approx(23.025850929940457, abs=1e-12)

    def test_lower_threshold(self):
        for x in range(0, 60):
            assert expected_lower(float(x), 1e-10) == 0.0
        assert expected_lower(60.0, 1e-10) > 0.0

    def test_upper_vs_gaussian_spread(self):
        # The variant stays above the Gaussian spread but within 2x of it.
        spread = expected_upper(100.0, 1e-10) - 100.0
        beta_spread = baseline_gaussian(100.0, 1e-10)[1] - 100.0
        assert beta_spread <= spread <= 2.0 * beta_spread

    def test_upper_validity_and_tightness(self):
        # At the certified upper mean the exact iid tail stays below eps;
        # 10% below it the tail is already above eps (the bound is tight).
        x, eps = 1000.0, 1e-3
        upper = expected_upper(x, eps)
        m = 20000
        assert binomial_tail_exact(m, upper / m, x, "lower") <= eps
        assert binomial_tail_exact(m, 0.9 * upper / m, x, "lower") > eps

    @given(
        x=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
        eps=st.floats(min_value=1e-12, max_value=0.1),
    )
    @settings(max_examples=60, deadline=None)
    def test_inversion_consistency(self, x, eps):
        assert expected_lower(x, eps) <= x <= expected_upper(x, eps)

    def test_upper_spread_monotone_in_count(self):
        xs = [0.0, 1.0, 10.0, 100.0, 1e4]
        spreads = [expected_upper(x, 1e-10) - x for x in xs]
        assert all(a <= b + 1e-9 for a, b in zip(spreads, spreads[1:]))


class TestGaussianBaseline:
    def test_beta_against_bisection_oracle(self):
        # Independent route: bisect mpmath.erfc for erfc(b/sqrt 2) = eps.
        lo, hi = mp.mpf(1), mp.mpf(10)
        for _ in range(200):
            mid = (lo + hi) / 2
            if mp.erfc(mid / mp.sqrt(2)) > mp.mpf("1e-10"):
                lo = mid
            else:
                hi = mid
        beta_oracle = float((lo + hi) / 2)
        lower, upper = baseline_gaussian(1.0, 1e-10)
        assert upper - 1.0 == pytest.approx(beta_oracle, abs=1e-6)
        assert beta_oracle == pytest.approx(6.466951087240517, abs=1e-9)

    def test_zero_thresholds(self):
        assert baseline_gaussian(0.0, 1e-10) == (0.0, 0.0)
        for x in range(0, 42):
            assert baseline_gaussian(float(x), 1e-10)[0] == 0.0
        assert baseline_gaussian(42.0, 1e-10)[0] > 0.0


class TestCurtyBaseline:
    def test_printed_values(self):
        assert baseline_curty(0.0)[1] == pytest.approx(196.264242620638, abs=1e-6)
        for x in range(0, 102):
            assert baseline_curty(float(x))[0] == 0.0
        assert baseline_curty(102.0)[0] > 0.0
        expected = 203.0 - math.sqrt(2 * 203.0 * math.log(1e10**1.5))
        assert baseline_curty(203.0)[0] == pytest.approx(expected, abs=1e-9)

    def test_rejects_other_failure_probabilities(self):
        with pytest.raises(DomainError):
            baseline_curty(10.0, eps_tuple=(1e-9, 1e-10, 1e-10, 1e-10))


class TestSamplingBaselines:
    def test_symmetric_reduction(self):
        n = k = 1e6
        c, d = 0.15, 1e-10
        direct = baseline_sampling_analytic(n, k, c, d)
        reduced = math.sqrt(
            2 * c * (1 - c) / (n * math.log(2)) * math.log2(2 / (n * c * (1 - c) * d * d))
        )
        assert direct == pytest.approx(reduced, rel=1e-12)

    def test_ordering_against_exact(self):
        exact = sampling_gamma_upper(1e6, 1e6, 0.15, 1e-10).value
        fung = baseline_sampling_fung(1e6, 1e6, 0.15, 1e-10).value
        analytic = baseline_sampling_analytic(1e6, 1e6, 0.15, 1e-10)
        assert exact <= fung <= analytic

    def test_domain_error_when_log_term_nonpositive(self):
        # (n+k) <= n k c (1-c) eps^2 forces the log term below zero.
        with pytest.raises(DomainError):
            baseline_sampling_analytic(1e6, 1e6, 0.5, 0.99)

    def test_small_strings_give_unusable_deviation(self):
        # At n = k = 10 the formula stays in domain but returns a deviation
        # beyond the physical error-rate range, which is the sense in which
        # the approximation fails for small strings.
        value = baseline_sampling_analytic(10, 10, 0.1, 1e-10)
        assert value > 1.0 - 0.1

    def test_fung_root_residual(self):
        sol = baseline_sampling_fung(1e6, 1e4, 0.15, 1e-10)
        assert not sol.clamped
        assert abs(sol.residual) <= 1e-12

    def test_fung_shrinks_toward_half(self):
        near_half = baseline_sampling_fung(1e6, 1e6, 0.499, 1e-10).value
        assert 0.0 < near_half < 0.01
