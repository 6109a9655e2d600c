import math

import numpy as np
import pytest
import scipy.integrate as si
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wmrelax import specfun as sf


def bessel_j_integral(n, x):
    """Poisson integral representation oracle."""
    val, _ = si.quad(lambda th: math.cos(x * math.cos(th))
                     * math.sin(th) ** (2 * n), 0.0, math.pi, limit=400)
    return (x / 2.0) ** n / (math.gamma(n + 0.5) * math.sqrt(math.pi)) * val


class TestBesselJ:
    def test_origin_values(self):
        assert sf.bessel_j(0, 0.0) == 1.0
        assert sf.bessel_j(1, 0.0) == 0.0

    def test_integral_representation_oracle(self):
        assert abs(sf.bessel_j(1, 2.5) - bessel_j_integral(1, 2.5)) < 1e-10

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_against_scipy_grid(self, n):
        x = np.geomspace(1e-6, 5e3, 300)
        assert np.max(np.abs(sf.bessel_j(n, x) - sp.jv(n, x))) < 1e-10

    def test_j1_envelope_bounds(self):
        x = np.geomspace(1.0, 1e4, 200)
        assert np.all(np.abs(sf.bessel_j(1, x)) <= 0.85 / np.sqrt(x))
        x = np.linspace(1e-6, 1.0, 50)
        assert np.all(np.abs(sf.bessel_j(1, x)) <= 0.5 * x + 1e-15)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sf.bessel_j(4, 1.0)
        with pytest.raises(ValueError):
            sf.bessel_j(1, -0.5)

    @staticmethod
    def _poisson_j1_derivs(x):
        # d/dx and d2/dx2 of the Poisson representation of J1 (independent
        # smooth oracle, no finite differences)
        c = 1.0 / (math.gamma(1.5) * math.sqrt(math.pi))
        i0, _ = si.quad(lambda th: math.cos(x * math.cos(th))
                        * math.sin(th) ** 2, 0, math.pi, limit=400)
        i1, _ = si.quad(lambda th: math.cos(th)
                        * math.sin(x * math.cos(th)) * math.sin(th) ** 2,
                        0, math.pi, limit=400)
        i2, _ = si.quad(lambda th: math.cos(th) ** 2
                        * math.cos(x * math.cos(th)) * math.sin(th) ** 2,
                        0, math.pi, limit=400)
        d1 = 0.5 * c * i0 - 0.5 * x * c * i1
        d2 = -c * i1 - 0.5 * x * c * i2
        return d1, d2

    def test_recurrence_j0_j2(self):
        # J0 - J2 = 2 J1', against the differentiated integral representation
        for x in np.linspace(0.1, 50.0, 60):
            d1, _ = self._poisson_j1_derivs(float(x))
            lhs = sf.bessel_j(0, x) - sf.bessel_j(2, x)
            assert abs(lhs - 2 * d1) < 1e-9

    def test_second_derivative_identity(self):
        # J1'' = (J3 - 3 J1)/4
        for x in np.linspace(0.1, 50.0, 60):
            _, d2 = self._poisson_j1_derivs(float(x))
            rhs = 0.25 * (sf.bessel_j(3, x) - 3 * sf.bessel_j(1, x))
            assert abs(d2 - rhs) < 1e-9


class TestBesselK:
    def test_pole_law(self):
        # x K1(x) -> 1
        for x in (1e-6, 1e-4, 1e-2):
            assert abs(x * sf.bessel_k(1, x) - 1.0) < 2 * x ** 2 * (
                abs(math.log(x)) + 1.0)

    def test_derivative_identity(self):
        # K1'(y) = -(y K0 + K1)/y at y = 0.7 by finite differences
        y, h = 0.7, 1e-6
        fd = (sf.bessel_k(1, y + h) - sf.bessel_k(1, y - h)) / (2 * h)
        rhs = -(y * sf.bessel_k(0, y) + sf.bessel_k(1, y)) / y
        assert abs(fd - rhs) < 1e-7

    def test_integral_representation_oracle(self):
        val, _ = si.quad(lambda s: math.exp(-math.cosh(s)), 0, 40.0,
                         limit=200)
        assert abs(sf.bessel_k(0, 1.0) - val) < 1e-10

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_against_scipy_grid(self, n):
        x = np.geomspace(1e-6, 40.0, 200)
        rel = np.abs(sf.bessel_k(n, x) / sp.kv(n, x) - 1.0)
        assert np.max(rel) < 1e-10

    def test_positive_and_decreasing(self):
        x = np.geomspace(1e-4, 30.0, 300)
        for n in range(3):
            v = sf.bessel_k(n, x)
            assert np.all(v > 0)
            assert np.all(np.diff(v) < 0)

    def test_small_argument_bounds(self):
        x = np.geomspace(1e-8, 3.0, 100)
        assert np.all(np.abs(-1.0 + x * sf.bessel_k(1, x))
                      <= 1.1 * x ** 2 * (np.abs(np.log(x)) + 1.0))
        assert np.all(np.abs(sf.bessel_k(0, x))
                      <= 1.2 * (np.abs(np.log(x)) + 1.0))
        assert np.all(x * sf.bessel_k(1, x) <= 1.0 + 1e-12)

    def test_k1_minus_recip(self):
        import mpmath
        mpmath.mp.dps = 30
        for x in (1e-6, 1e-3, 0.5, 3.0, 10.0):
            ref = float(mpmath.besselk(1, x) - 1.0 / mpmath.mpf(x))
            assert abs(sf.bessel_k1_minus_recip(x) / ref - 1.0) < 1e-10

    def test_domain_error(self):
        with pytest.raises(ValueError):
            sf.bessel_k(1, 0.0)
        with pytest.raises(ValueError):
            sf.bessel_k(1, -1.0)


class TestUpperGamma:
    def test_exponential_case(self):
        for x in (0.3, 1.0, 4.0):
            assert abs(sf.upper_incomplete_gamma(1.0, x)
                       - math.exp(-x)) < 1e-14

    def test_quadrature_oracle(self):
        val, _ = si.quad(lambda t: t * math.exp(-t), 0.5, 60.0, limit=200)
        assert abs(sf.upper_incomplete_gamma(2.0, 0.5) - val) < 1e-10

    def test_negative_order_for_energy_bound(self):
        # s = 3 - 2b at b = 2
        x = math.log(8.0)
        val, _ = si.quad(lambda t: t ** (-2.0) * math.exp(-t), x, 80.0,
                         limit=200)
        assert abs(sf.upper_incomplete_gamma(-1.0, x) - val) < 1e-10

    def test_domain(self):
        with pytest.raises(ValueError):
            sf.upper_incomplete_gamma(1.0, 0.0)


class TestCutoffs:
    def test_plateau_and_support(self):
        assert sf.chi_le_quarter(0.1) == 1.0
        assert sf.chi_le_quarter(0.3) == 0.0
        assert sf.chi_ge_one(2.5) == 1.0
        assert sf.chi_ge_one(0.9) == 0.0
        v = sf.chi_ge_one(1.5)
        assert 0.0 < v < 1.0

    @given(st.floats(min_value=0.0, max_value=3.0))
    @settings(max_examples=200, deadline=None)
    def test_range(self, x):
        for f in (sf.chi_le_quarter, sf.chi_ge_one):
            assert 0.0 <= f(x) <= 1.0

    def test_monotone_transitions(self):
        x = np.linspace(1.0, 2.0, 200)
        assert np.all(np.diff(sf.chi_ge_one(x)) >= 0)
        x = np.linspace(0.125, 0.25, 200)
        assert np.all(np.diff(sf.chi_le_quarter(x)) <= 0)

    def test_derivatives_vanish_outside_band(self):
        for x in (0.05, 0.124, 0.26, 0.5):
            assert sf.chi_le_quarter(x, 1) == 0.0
            assert sf.chi_le_quarter(x, 2) == 0.0
        for x in (0.5, 0.99, 2.01, 5.0):
            assert sf.chi_ge_one(x, 1) == 0.0
            assert sf.chi_ge_one(x, 2) == 0.0

    def test_derivatives_match_finite_differences(self):
        h = 1e-5
        for x in (0.15, 0.2, 0.23):
            fd = (sf.chi_le_quarter(x + h) - sf.chi_le_quarter(x - h)) / (2 * h)
            assert abs(sf.chi_le_quarter(x, 1) - fd) < 1e-4 * (1 + abs(fd))
        for x in (1.2, 1.5, 1.8):
            fd2 = (sf.chi_ge_one(x + h) - 2 * sf.chi_ge_one(x)
                   + sf.chi_ge_one(x - h)) / h ** 2
            assert abs(sf.chi_ge_one(x, 2) - fd2) < 1e-3 * (1 + abs(fd2))

    def test_cutoff_spec_validation(self):
        with pytest.raises(ValueError):
            sf.CutoffSpec("middle", 0.0, 1.0)
        with pytest.raises(ValueError):
            sf.cutoff(sf.CHI_LE_QUARTER, 0.1, deriv=3)
