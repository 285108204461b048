import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import c

from fwmbs.core import (
    angular_frequency_to_wavelength,
    dispersion_parameter,
    dispersion_parameter_ps_nm_km,
    second_derivative_on_grid,
    wavelength_to_angular_frequency,
)
from fwmbs.errors import ValidationError


class TestUnitConversions:
    def test_1550nm(self):
        # oracle: direct evaluation of 2 pi c / lambda
        expected = 2.0 * math.pi * c / 1550e-9
        assert expected == pytest.approx(1.2153e15, rel=1e-4)
        assert wavelength_to_angular_frequency(1550e-9) == pytest.approx(expected)

    def test_980nm(self):
        expected = 2.0 * math.pi * c / 980e-9
        assert expected == pytest.approx(1.9222e15, rel=1e-4)
        assert wavelength_to_angular_frequency(980e-9) == pytest.approx(expected)

    def test_round_trip_980(self):
        om = wavelength_to_angular_frequency(980e-9)
        assert angular_frequency_to_wavelength(om) == pytest.approx(980e-9, rel=1e-12)

    @given(st.floats(min_value=400e-9, max_value=2500e-9))
    def test_round_trip_identity(self, lam):
        om = wavelength_to_angular_frequency(lam)
        assert angular_frequency_to_wavelength(om) == pytest.approx(lam, rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -1e-6, math.nan, math.inf])
    def test_domain_errors(self, bad):
        with pytest.raises(ValidationError):
            wavelength_to_angular_frequency(bad)
        with pytest.raises(ValidationError):
            angular_frequency_to_wavelength(bad)

    def test_vectorized(self):
        lam = np.array([980e-9, 1550e-9])
        om = wavelength_to_angular_frequency(lam)
        assert om.shape == (2,)
        np.testing.assert_allclose(angular_frequency_to_wavelength(om), lam,
                                   rtol=1e-14)


class TestDispersionParameter:
    def test_zero_beta2(self):
        assert dispersion_parameter(0.0, 1550e-9) == 0.0

    def test_reference_value(self):
        # oracle: -(2 pi c / lambda^2) beta2 evaluated directly
        expected_si = -(2.0 * math.pi * c / 1550e-9**2) * 1e-25
        d = dispersion_parameter_ps_nm_km(1e-25, 1550e-9)
        assert d == pytest.approx(expected_si * 1e6)
        assert d == pytest.approx(-78.5, rel=2e-3)

    @given(st.floats(min_value=1e-28, max_value=1e-23),
           st.floats(min_value=400e-9, max_value=2500e-9))
    def test_positive_beta2_gives_negative_d(self, beta2, lam):
        assert dispersion_parameter(beta2, lam) < 0.0

    @given(st.floats(min_value=-1e-24, max_value=1e-24,
                     allow_nan=False, allow_subnormal=False),
           st.floats(min_value=400e-9, max_value=2500e-9))
    def test_linearity_in_beta2(self, beta2, lam):
        assert dispersion_parameter(-beta2, lam) == pytest.approx(
            -dispersion_parameter(beta2, lam))

    def test_rejects_bad_wavelength(self):
        with pytest.raises(ValidationError):
            dispersion_parameter(1e-25, -1550e-9)
        with pytest.raises(ValidationError):
            dispersion_parameter(math.nan, 1550e-9)


class TestSecondDerivative:
    def test_quadratic_exact_uniform(self):
        x = np.linspace(0.5, 3.5, 11)
        y = 3.0 - 2.0 * x + 0.5 * 7.0 * x**2
        d2 = second_derivative_on_grid(x, y)
        np.testing.assert_allclose(d2, 7.0, rtol=1e-10)

    def test_quadratic_exact_nonuniform(self):
        x = np.array([0.0, 0.3, 1.0, 1.8, 3.0, 3.9, 5.0])
        y = 1.0 + 2.0 * x + 0.5 * 4.0 * x**2
        np.testing.assert_allclose(second_derivative_on_grid(x, y), 4.0,
                                   rtol=1e-10)

    def test_quadratic_exact_physics_scale(self):
        # the affine part of beta is ~1e9 times the curvature contribution, so
        # last-place rounding of beta caps the achievable accuracy near 1e-9
        om0 = 1.2e15
        om = np.linspace(om0 - 1e14, om0 + 1e14, 65)
        beta2 = 1.7e-25
        y = 1e5 + 5e-9 * (om - om0) + 0.5 * beta2 * (om - om0) ** 2
        d2 = second_derivative_on_grid(om, y)
        np.testing.assert_allclose(d2[1:-1], beta2, rtol=1e-10)
        np.testing.assert_allclose(d2, beta2, rtol=1e-9)

    def test_cubic_second_order_convergence(self):
        # oracle: d2/dx2 x^3 = 6x. On a smoothly non-uniform grid the stencil
        # error is O(h^2); halving h shrinks it by ~4.
        def err(n):
            s = np.linspace(0.0, 1.0, n)
            x = 1.0 + s + 0.3 * s**2  # smooth non-uniform mapping
            d2 = second_derivative_on_grid(x, x**3)
            return np.max(np.abs(d2 - 6.0 * x))

        e1, e2, e3 = err(33), err(65), err(129)
        assert e2 < e1 and e3 < e2
        assert e1 / e2 == pytest.approx(4.0, rel=0.35)
        assert e2 / e3 == pytest.approx(4.0, rel=0.35)

    def test_constant_gives_zero(self):
        x = np.linspace(0.0, 1.0, 9)
        np.testing.assert_allclose(
            second_derivative_on_grid(x, np.full_like(x, 4.2)), 0.0,
            atol=1e-12)

    def test_descending_grid_allowed(self):
        x = np.linspace(3.0, 0.0, 13)
        y = 0.5 * 2.0 * x**2
        np.testing.assert_allclose(second_derivative_on_grid(x, y), 2.0,
                                   rtol=1e-10)

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            second_derivative_on_grid(np.arange(4.0), np.arange(4.0))

    def test_non_monotone(self):
        with pytest.raises(ValidationError):
            second_derivative_on_grid(np.array([0.0, 1.0, 0.5, 2.0, 3.0]),
                                      np.zeros(5))

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            second_derivative_on_grid(np.arange(6.0), np.arange(5.0))
