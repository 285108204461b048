import math

import numpy as np
import pytest
from scipy.constants import c
from scipy.optimize import brentq

from fwmbs.core import wavelength_to_angular_frequency
from fwmbs.errors import CutoffError, PhysicsError, ValidationError
from fwmbs.materials import refractive_index
from fwmbs.modesolver import (
    DispersionProfile,
    WaveguideGeometry,
    effective_area,
    effective_area_from_profile,
    effective_index,
    nonlinear_coefficient,
    propagation_constant_table,
    slab_effective_index,
    solve_mode,
    solve_slab,
    zero_dispersion_wavelengths,
)

# Frozen pipeline outputs for the 550x1200 strip (regression guards; the
# physics behind them is cross-checked by the oracle tests in this file).
GOLDEN_NEFF_1550_TE = 1.7256724939427746
GOLDEN_ZDW_NM = (1105.62, 1302.48)
GOLDEN_GAMMA_1550 = 1.4695
GOLDEN_GAMMA_980 = 3.2802


def tmm_slab_neff(n_film, n_cover, n_substrate, thickness, lam, polarization="TE"):
    """Independent transfer-matrix slab solver (oracle).

    Propagates (U, U'/q) across the film, with U = E_y, q = 1 for TE and
    U = H_y, q = n^2 for TM, and requires decaying fields in both claddings.
    """
    k0 = 2.0 * math.pi / lam

    def mismatch(n_eff):
        kap = k0 * math.sqrt(n_film**2 - n_eff**2)
        g_s = k0 * math.sqrt(n_eff**2 - n_substrate**2)
        g_c = k0 * math.sqrt(n_eff**2 - n_cover**2)
        q_f, q_s, q_c = ((n_film**2, n_substrate**2, n_cover**2)
                         if polarization == "TM" else (1.0, 1.0, 1.0))
        u, du = 1.0, g_s / q_s  # decaying substrate solution at x = 0
        ct, st = math.cos(kap * thickness), math.sin(kap * thickness)
        u_t = u * ct + du * q_f * st / kap
        du_t = -u * kap * st / q_f + du * ct
        return du_t + (g_c / q_c) * u_t

    lo = max(n_cover, n_substrate) + 1e-9
    hi = n_film - 1e-9
    grid = np.linspace(lo, hi, 4001)
    vals = [mismatch(n) for n in grid]
    for i in range(len(grid) - 1, 0, -1):  # fundamental = largest n_eff root
        if vals[i - 1] * vals[i] < 0:
            return brentq(mismatch, grid[i - 1], grid[i], xtol=1e-12)
    raise AssertionError("oracle found no guided mode")


class TestSlab:
    def test_thick_symmetric_slab_approaches_film_index(self):
        # asymptotic gap ~ (pi / k0 t)^2 / 2 n_film, below 1e-4 at t = 20
        # wavelengths for a high-index film
        lam = 1550e-9
        n_eff = slab_effective_index(3.48, 1.44, 1.44, 20 * lam, lam, "TE")
        assert n_eff == pytest.approx(3.48, abs=1e-4)
        assert n_eff < 3.48

    def test_film_below_cladding_is_cutoff(self):
        with pytest.raises(CutoffError):
            slab_effective_index(1.3, 1.45, 1.45, 550e-9, 1550e-9, "TE")

    def test_asymmetric_cutoff_distinct_error(self):
        # very thin film on a high substrate: fundamental below cutoff
        with pytest.raises(CutoffError):
            slab_effective_index(1.46, 1.0, 1.45, 5e-9, 1550e-9, "TE")

    @pytest.mark.parametrize("pol", ["TE", "TM"])
    @pytest.mark.parametrize("lam,t", [(1550e-9, 550e-9), (980e-9, 550e-9),
                                       (1310e-9, 700e-9)])
    def test_against_transfer_matrix_oracle(self, db, pol, lam, t):
        n_f = refractive_index(db, "Si3N4", lam)
        n_s = refractive_index(db, "SiO2", lam)
        ours = slab_effective_index(n_f, 1.0, n_s, t, lam, pol)
        oracle = tmm_slab_neff(n_f, 1.0, n_s, t, lam, pol)
        assert ours == pytest.approx(oracle, abs=1e-6)

    def test_slab_field_continuity(self, db):
        lam = 1550e-9
        mode = solve_slab(refractive_index(db, "Si3N4", lam), 1.0,
                          refractive_index(db, "SiO2", lam), 550e-9, lam, "TE")
        eps = 1e-14  # small against the 1/kappa field scale
        for edge in (0.0, mode.thickness):
            below = mode.field(np.array([edge - eps]))[0]
            above = mode.field(np.array([edge + eps]))[0]
            assert below == pytest.approx(above, rel=1e-6)

    def test_polarizations_differ(self, db):
        lam = 1550e-9
        n_f = refractive_index(db, "Si3N4", lam)
        n_s = refractive_index(db, "SiO2", lam)
        te = slab_effective_index(n_f, 1.0, n_s, 550e-9, lam, "TE")
        tm = slab_effective_index(n_f, 1.0, n_s, 550e-9, lam, "TM")
        assert te > tm  # TM sees the boundaries harder in a thin high-contrast film

    def test_bad_polarization(self):
        with pytest.raises(ValidationError):
            slab_effective_index(2.0, 1.0, 1.45, 550e-9, 1550e-9, "TEM")


class TestEffectiveIndexMethod:
    def test_wide_guide_reduces_to_vertical_slab(self, db):
        lam = 1550e-9
        geometry = WaveguideGeometry(width=50 * 550e-9, height=550e-9)
        mode = solve_mode(db, geometry, lam)
        assert mode.n_eff == pytest.approx(mode.vertical.n_eff, abs=1e-3)

    @pytest.mark.parametrize("lam", [980e-9, 1200e-9, 1550e-9])
    @pytest.mark.parametrize("pol", ["TE", "TM"])
    def test_guidance_bound(self, db, strip_1200, lam, pol):
        n_eff = effective_index(db, strip_1200, lam, pol)
        n_core = refractive_index(db, "Si3N4", lam)
        n_sub = refractive_index(db, "SiO2", lam)
        assert n_sub < n_eff < n_core

    def test_golden_neff_1550(self, db, strip_1200):
        assert effective_index(db, strip_1200, 1550e-9, "TE") == pytest.approx(
            GOLDEN_NEFF_1550_TE, abs=2e-7)

    def test_narrow_guide_cutoff(self, db):
        geometry = WaveguideGeometry(width=50e-9, height=550e-9)
        with pytest.raises(CutoffError):
            solve_mode(db, geometry, 1550e-9)


class TestPropagationTable:
    def test_beta_strictly_increasing(self, db, strip_1200):
        prof = propagation_constant_table(db, strip_1200, (900e-9, 1700e-9), 96)
        assert np.all(np.diff(prof.beta) > 0)

    def test_beta2_self_convergence(self, db, strip_1200):
        # beta2 crosses zero inside this window, so measure the change
        # against the table's beta2 scale rather than pointwise
        p1 = propagation_constant_table(db, strip_1200, (1000e-9, 1600e-9), 65)
        p2 = propagation_constant_table(db, strip_1200, (1000e-9, 1600e-9), 129)
        shared = p2.beta2[::2][1:-1]
        rel = np.abs(p1.beta2[1:-1] - shared) / np.max(np.abs(shared))
        assert np.max(rel) < 1e-3

    def test_single_anomalous_pocket_with_normal_pumps(self, db, strip_1200):
        # first crossing near 1100 nm, second near 1300 nm; both the 980 nm
        # and 1550 nm bands stay normal-dispersion
        prof = propagation_constant_table(db, strip_1200, (900e-9, 1700e-9), 256)
        zdw = zero_dispersion_wavelengths(prof)
        assert len(zdw) == 2
        assert 1100e-9 <= zdw[0] <= 1300e-9
        np.testing.assert_allclose([z * 1e9 for z in zdw], GOLDEN_ZDW_NM, atol=0.5)
        assert prof.d_at_wavelength(980e-9) < 0
        assert prof.d_at_wavelength(1550e-9) < 0

    def test_cutoff_names_wavelength(self, db):
        geometry = WaveguideGeometry(width=50e-9, height=550e-9)
        with pytest.raises(CutoffError, match="nm"):
            propagation_constant_table(db, geometry, (1500e-9, 1600e-9), 64)

    def test_rejects_small_tables(self, db, strip_1200):
        with pytest.raises(ValidationError):
            propagation_constant_table(db, strip_1200, (900e-9, 1700e-9), 32)

    def test_evaluation_outside_table_rejected(self, db, strip_1200):
        prof = propagation_constant_table(db, strip_1200, (1400e-9, 1600e-9), 64)
        with pytest.raises(PhysicsError):
            prof.beta_at(wavelength_to_angular_frequency(1000e-9))


class TestZeroDispersion:
    def test_synthetic_linear_crossing_exact(self):
        om0 = wavelength_to_angular_frequency(1200e-9)
        om = np.linspace(om0 - 5e13, om0 + 5e13, 101)
        a = 3e-39
        beta = 8.0e6 + 4e-9 * (om - om0) + a * (om - om0) ** 3 / 6.0
        prof = DispersionProfile.from_beta(om, beta)  # beta2 = a (om - om0)
        roots = zero_dispersion_wavelengths(prof)
        assert len(roots) == 1
        assert roots[0] == pytest.approx(1200e-9, rel=1e-9)

    def test_no_crossing_returns_empty(self):
        om0 = wavelength_to_angular_frequency(1550e-9)
        om = np.linspace(om0 - 5e13, om0 + 5e13, 64)
        beta = 1.0e7 + 5e-9 * (om - om0) + 0.5 * 1e-25 * (om - om0) ** 2
        assert zero_dispersion_wavelengths(DispersionProfile.from_beta(om, beta)) == []

    def test_d_vanishes_at_reported_zdw(self, db, strip_1200):
        prof = propagation_constant_table(db, strip_1200, (900e-9, 1700e-9), 256)
        for root in zero_dispersion_wavelengths(prof):
            assert abs(prof.d_at_wavelength(root)) < 0.5  # ps/nm/km


class TestEffectiveArea:
    def test_gaussian_oracle(self):
        # closed form: A_eff of a separable Gaussian is pi * wx * wy
        wx, wy = 0.7e-6, 1.3e-6
        x = np.linspace(-6 * wx, 6 * wx, 4097)
        y = np.linspace(-6 * wy, 6 * wy, 4097)
        a = effective_area_from_profile(x, np.exp(-(x / wx) ** 2),
                                        y, np.exp(-(y / wy) ** 2))
        assert a == pytest.approx(math.pi * wx * wy, rel=1e-4)

    def test_closed_form_matches_quadrature(self, db, strip_1200):
        mode = solve_mode(db, strip_1200, 1550e-9)
        v, h = mode.vertical, mode.horizontal
        x = np.linspace(-3e-6, v.thickness + 3e-6, 20001)
        y = np.linspace(-3e-6, h.thickness + 3e-6, 20001)
        sampled = effective_area_from_profile(x, v.field(x), y, h.field(y))
        assert mode.effective_area() == pytest.approx(sampled, rel=1e-4)

    def test_monotone_in_wavelength(self, db, strip_1200):
        areas = [effective_area(db, strip_1200, lam)
                 for lam in np.linspace(1200e-9, 1600e-9, 9)]
        assert np.all(np.diff(areas) > 0)

    def test_strip_area_in_sane_window(self, db, strip_1200):
        a = effective_area(db, strip_1200, 1550e-9)
        assert 0.1e-12 <= a <= 1.5e-12


class TestNonlinearCoefficient:
    def test_reference_point(self):
        # oracle: invert gamma = 2 pi n2 / (lambda A_eff) at gamma = 6
        gamma = nonlinear_coefficient(0.169e-12, 2.5e-19, 1550e-9)
        assert gamma == pytest.approx(
            2 * math.pi * 2.5e-19 / (1550e-9 * 0.169e-12))
        assert gamma == pytest.approx(6.0, rel=1e-2)

    def test_inverse_proportional_to_area(self):
        g1 = nonlinear_coefficient(0.2e-12, 2.5e-19, 1550e-9)
        g2 = nonlinear_coefficient(0.4e-12, 2.5e-19, 1550e-9)
        assert g1 == pytest.approx(2.0 * g2, rel=1e-12)

    def test_definition_consistency_on_table(self, db, strip_1200):
        prof = propagation_constant_table(db, strip_1200, (1200e-9, 1600e-9), 64)
        lam = prof.wavelengths()
        a_eff = 2 * math.pi * 2.5e-19 / (prof.gamma * lam)
        np.testing.assert_allclose(prof.gamma * a_eff * lam,
                                   2 * math.pi * 2.5e-19, rtol=1e-12)

    def test_end_to_end_golden_values(self, db, strip_1200):
        g1550 = nonlinear_coefficient(effective_area(db, strip_1200, 1550e-9),
                                      2.5e-19, 1550e-9)
        g980 = nonlinear_coefficient(effective_area(db, strip_1200, 980e-9),
                                     2.5e-19, 980e-9)
        assert g1550 == pytest.approx(GOLDEN_GAMMA_1550, rel=1e-3)
        assert g980 == pytest.approx(GOLDEN_GAMMA_980, rel=1e-3)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            nonlinear_coefficient(0.0, 2.5e-19, 1550e-9)
