import math

import numpy as np
import pytest

from jsrcert.caps import (
    ConfidenceBudget,
    beta_from_eps,
    cap_params,
    delta_cap,
    eps_cover,
    eps_one,
    inv_reg_inc_beta,
    min_samples_finite,
    reg_inc_beta,
)


class TestRegIncBeta:
    def test_full_integral_is_one(self):
        for a, b in ((0.5, 0.5), (1.0, 2.0), (3.5, 0.7)):
            assert reg_inc_beta(1.0, a, b) == 1.0
            assert reg_inc_beta(0.0, a, b) == 0.0

    def test_arcsine_half(self):
        assert reg_inc_beta(0.5, 0.5, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_uniform_density(self):
        assert reg_inc_beta(0.25, 1.0, 1.0) == pytest.approx(0.25, abs=1e-12)

    def test_arcsine_closed_form_grid(self):
        # I(x; 1/2, 1/2) = (2/pi) arcsin(sqrt(x))
        for x in np.linspace(0.01, 0.99, 25):
            expected = 2.0 / math.pi * math.asin(math.sqrt(x))
            assert reg_inc_beta(float(x), 0.5, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_power_law_closed_form(self):
        # I(x; a, 1) = x^a
        for x in (0.1, 0.4, 0.9):
            for a in (0.7, 2.0, 3.5):
                assert reg_inc_beta(x, a, 1.0) == pytest.approx(x**a, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reg_inc_beta(0.5, 0.0, 1.0)
        with pytest.raises(ValueError):
            reg_inc_beta(0.5, 1.0, -1.0)
        with pytest.raises(ValueError):
            reg_inc_beta(1.5, 1.0, 1.0)


class TestInvRegIncBeta:
    def test_boundaries(self):
        assert inv_reg_inc_beta(0.0, 2.0, 3.0) == 0.0
        assert inv_reg_inc_beta(1.0, 2.0, 3.0) == 1.0

    def test_closed_form_b_half(self):
        # I(x; 1, 1/2) = 1 - sqrt(1-x), so the inverse of 0.36 is 0.5904.
        assert inv_reg_inc_beta(0.36, 1.0, 0.5) == pytest.approx(0.5904, abs=1e-12)

    def test_arcsine_symmetry(self):
        assert inv_reg_inc_beta(0.5, 0.5, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = rng.uniform(0.4, 5.0)
            b = rng.uniform(0.4, 5.0)
            x = rng.uniform(0.0, 1.0)
            y = reg_inc_beta(x, a, b)
            assert inv_reg_inc_beta(y, a, b) == pytest.approx(x, abs=1e-10)

    def test_monotone_in_y(self):
        ys = np.linspace(0.0, 1.0, 41)
        xs = [inv_reg_inc_beta(float(y), 1.7, 0.5) for y in ys]
        assert all(x1 <= x2 + 1e-15 for x1, x2 in zip(xs, xs[1:]))


class TestDeltaCap:
    def test_closed_form_n2(self):
        assert delta_cap(0.25, 2) == pytest.approx(math.cos(math.pi * 0.25), abs=1e-10)

    def test_closed_form_n3(self):
        assert delta_cap(0.1, 3) == pytest.approx(0.8, abs=1e-10)

    def test_zero_beyond_half(self):
        assert delta_cap(0.6, 5) == 0.0
        assert delta_cap(0.5, 2) == 0.0
        assert delta_cap(1.45, 4) == 0.0

    def test_closed_form_grids(self):
        for eps in np.linspace(0.004, 0.496, 100):
            assert delta_cap(float(eps), 2) == pytest.approx(math.cos(math.pi * eps), abs=1e-10)
            assert delta_cap(float(eps), 3) == pytest.approx(1.0 - 2.0 * eps, abs=1e-10)

    def test_monotone_and_limits(self):
        for n in range(2, 7):
            grid = [delta_cap(float(e), n) for e in np.linspace(1e-6, 0.4999, 80)]
            assert all(a >= b - 1e-12 for a, b in zip(grid, grid[1:]))
            assert grid[0] > 1.0 - 1e-2
            assert delta_cap(0.49999, n) <= 1e-2
            assert delta_cap(0.4999999999, n) <= 1e-5

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            delta_cap(0.0, 3)
        with pytest.raises(ValueError):
            delta_cap(0.2, 1)

    def test_cap_params_regime_flag(self):
        p = cap_params(0.7, 3)
        assert p.delta == 0.0 and p.delta_zero and p.Delta == pytest.approx(math.sqrt(2.0))
        q = cap_params(0.1, 3)
        assert not q.delta_zero
        assert q.Delta == pytest.approx(math.sqrt(2 - 2 * 0.8), abs=1e-10)


class TestEpsCover:
    def test_reference_value(self):
        assert eps_cover(0.95, 2.0, 3, 1000) == pytest.approx(0.00874487912934252, rel=1e-9)

    def test_degenerate_direct_substitution(self):
        assert eps_cover(0.0, 2.0, 3, 1) == pytest.approx(1.5, rel=1e-12)

    def test_large_trace_regime(self):
        # Above 1/2, so the cap threshold is 0, yet the bound stays finite.
        val = eps_cover(0.95, 125.0, 3, 375)
        assert val == pytest.approx(1.4521743980342312, rel=1e-9)
        assert val > 0.5

    def test_matches_quadratic_formula_symbol_for_symbol(self):
        # With d1 = n(n+1)/2 the unified formula must equal
        # m^l (1 - (2(1-beta)/(n(n+1)+2))^(1/N)).
        for n, beta, ml, N in ((2, 0.9, 4.0, 77), (3, 0.5, 2.0, 13), (4, 0.99, 9.0, 400)):
            d1 = n * (n + 1) // 2
            direct = ml * (1.0 - (2.0 * (1.0 - beta) / (n * (n + 1) + 2)) ** (1.0 / N))
            assert eps_cover(beta, ml, d1, N) == pytest.approx(direct, rel=1e-14)

    def test_monotonicity(self):
        vals_N = [eps_cover(0.95, 2.0, 3, N) for N in (10, 100, 1000, 10000)]
        assert all(a > b for a, b in zip(vals_N, vals_N[1:]))
        vals_ml = [eps_cover(0.95, ml, 3, 100) for ml in (1.0, 2.0, 8.0, 125.0)]
        assert all(a < b for a, b in zip(vals_ml, vals_ml[1:]))


class TestBetaFromEps:
    def test_full_measure_gives_certainty(self):
        assert beta_from_eps(2.0, 2.0, 3, 10) == 1.0

    def test_reference_value(self):
        assert beta_from_eps(0.5, 2.0, 3, 10) == pytest.approx(0.7747459411621094, rel=1e-12)

    def test_roundtrip_with_eps_cover(self):
        eps = eps_cover(0.95, 2.0, 3, 1000)
        assert beta_from_eps(eps, 2.0, 3, 1000) == pytest.approx(0.95, abs=1e-9)

    def test_clamped_at_zero(self):
        assert beta_from_eps(1e-6, 2.0, 3, 1) == 0.0

    def test_rejects_eps_above_ml(self):
        with pytest.raises(ValueError):
            beta_from_eps(2.5, 2.0, 3, 10)


class TestEpsOne:
    def test_zero_confidence(self):
        assert eps_one(0.0, 3, 2, 50) == 0.0

    def test_reference_values(self):
        assert eps_one(0.95, 5, 3, 375) == pytest.approx(0.49729969852879696, rel=1e-9)
        assert eps_one(0.95, 2, 1, 1000) == pytest.approx(0.0029912495450953314, rel=1e-9)


class TestMinSamplesFinite:
    def test_five_modes_three_steps(self):
        # Direct evaluation gives 373; a band of [370, 378] absorbs
        # non-strict rounding conventions for the same setting.
        n = min_samples_finite(0.95, 5, 3)
        assert n == 373
        assert eps_one(0.95, 5, 3, n) < 0.5 <= eps_one(0.95, 5, 3, n - 1)

    def test_two_modes_single_step(self):
        assert min_samples_finite(0.95, 2, 1) == 5

    def test_single_mode(self):
        assert min_samples_finite(0.95, 1, 7) == 1

    def test_tiny_confidence(self):
        assert min_samples_finite(1e-9, 3, 2) == 1

    def test_domain(self):
        with pytest.raises(ValueError):
            min_samples_finite(0.0, 2, 1)
        with pytest.raises(ValueError):
            min_samples_finite(1.0, 2, 1)


class TestConfidenceBudget:
    def test_derived_quantities(self):
        b = ConfidenceBudget(beta=0.95, beta1=0.95, m=2, l=1, N=100, n=2, d=2)
        assert b.ml == 2.0
        assert b.lift_dim == 3
        assert b.free_vars == 6

    def test_validation(self):
        with pytest.raises(ValueError):
            ConfidenceBudget(beta=1.0, beta1=0.5, m=2, l=1, N=10, n=2, d=1)
        with pytest.raises(ValueError):
            ConfidenceBudget(beta=0.5, beta1=0.5, m=0, l=1, N=10, n=2, d=1)
