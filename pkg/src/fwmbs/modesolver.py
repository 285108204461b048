"""Guided-mode solver for rectangular strip waveguides (effective-index method).

The full 2-D mode problem is reduced to two 1-D slab problems: a vertical
slab (core film between top cladding and substrate) solved at the requested
polarization, then a horizontal slab whose film index is the vertical result
and whose side claddings are the top-cladding material (etched ridge). The
horizontal stage uses scalar (field-and-derivative continuous, TE-type)
boundary conditions for either polarization: the textbook discontinuous
(TM-type) sidewall conditions badly overcorrect at the air/nitride contrast
of an etched ridge and produce a spurious anomalous dispersion offset of
order +200 ps/(nm km).

The scalar mode profile is separable, E(x, y) = X(x) Y(y), built from each
slab's cos/exp field shape; effective area and the nonlinear coefficient
gamma = 2 pi n2 / (lambda A_eff) follow from closed-form moment integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core import (
    angular_frequency_to_wavelength,
    dispersion_parameter_ps_nm_km,
    second_derivative_on_grid,
    wavelength_to_angular_frequency,
)
from .errors import CutoffError, PhysicsError, ValidationError
from .materials import MaterialDb, refractive_index

# Default Kerr nonlinear refractive index of the core, m^2/W.
N2_DEFAULT = 2.5e-19

# Root bracketing: initial scan resolution and bisection tolerance on n_eff.
# The contract is 1e-9 on n_eff; we converge tighter so that second
# differences of beta stay quiet near dispersion zeros.
_SCAN_POINTS = 200
_NEFF_TOL = 1e-12

TE = "TE"
TM = "TM"


def _check_polarization(polarization: str) -> str:
    if polarization not in (TE, TM):
        raise ValidationError(f"polarization must be 'TE' or 'TM', got {polarization!r}")
    return polarization


@dataclass(frozen=True)
class WaveguideGeometry:
    """Rectangular strip cross-section plus device length (all meters)."""

    width: float
    height: float
    core: str = "Si3N4"
    top_clad: str = "Air"
    substrate: str = "SiO2"
    length: float = 18e-3

    def __post_init__(self):
        for name in ("width", "height"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"geometry {name} must be positive, got {v!r}")
        # length 0 is allowed: a degenerate device the conversion model maps
        # to eta = 0 everywhere.
        if not (isinstance(self.length, (int, float)) and math.isfinite(self.length)
                and self.length >= 0):
            raise ValidationError(f"geometry length must be >= 0, got {self.length!r}")


@dataclass(frozen=True)
class SlabMode:
    """Fundamental mode of an asymmetric three-layer slab.

    Field shape (peak-normalized transverse coordinate u, film on [0, t]):
    cos(kappa u - phi) in the film, continuous exponential tails
    exp(+gamma_sub u) below and exp(-gamma_cov (u - t)) above.
    """

    n_eff: float
    thickness: float
    kappa: float        # transverse wavenumber in the film, rad/m
    gamma_sub: float    # substrate decay constant, 1/m
    gamma_cov: float    # cover decay constant, 1/m
    phi: float          # film phase offset, rad
    polarization: str

    def field(self, u):
        """Scalar field samples at transverse positions u (meters)."""
        u = np.asarray(u, dtype=float)
        t = self.thickness
        film = np.cos(self.kappa * u - self.phi)
        below = math.cos(self.phi) * np.exp(self.gamma_sub * u)
        above = math.cos(self.kappa * t - self.phi) * np.exp(-self.gamma_cov * (u - t))
        return np.where(u < 0.0, below, np.where(u > t, above, film))

    def moment(self, p: int) -> float:
        """Closed-form integral of field^(2p) over the real line (p = 1 or 2)."""
        t, k, phi = self.thickness, self.kappa, self.phi
        u1, u2 = -phi, k * t - phi
        if p == 1:
            film = ((u2 - u1) / 2.0 + (math.sin(2 * u2) - math.sin(2 * u1)) / 4.0) / k
            tails = (
                math.cos(phi) ** 2 / (2.0 * self.gamma_sub)
                + math.cos(u2) ** 2 / (2.0 * self.gamma_cov)
            )
        elif p == 2:
            film = (
                3.0 * (u2 - u1) / 8.0
                + (math.sin(2 * u2) - math.sin(2 * u1)) / 4.0
                + (math.sin(4 * u2) - math.sin(4 * u1)) / 32.0
            ) / k
            tails = (
                math.cos(phi) ** 4 / (4.0 * self.gamma_sub)
                + math.cos(u2) ** 4 / (4.0 * self.gamma_cov)
            )
        else:
            raise ValidationError(f"moment order must be 1 or 2, got {p}")
        return film + tails

    def width_1d(self) -> float:
        """One-dimensional effective extent (integral X^2)^2 / integral X^4."""
        return self.moment(1) ** 2 / self.moment(2)


def _slab_dispersion(n_eff, k0, t, n_film, n_cover, n_substrate, polarization):
    """Fundamental-mode dispersion function; a root in n_eff solves the slab."""
    kap = k0 * math.sqrt(max(n_film**2 - n_eff**2, 0.0))
    g_c = k0 * math.sqrt(max(n_eff**2 - n_cover**2, 0.0))
    g_s = k0 * math.sqrt(max(n_eff**2 - n_substrate**2, 0.0))
    if polarization == TM:
        g_c = g_c * (n_film / n_cover) ** 2
        g_s = g_s * (n_film / n_substrate) ** 2
    if kap == 0.0:
        return -math.pi  # n_eff at the film index: always past the root
    return kap * t - math.atan2(g_c, kap) - math.atan2(g_s, kap)


def solve_slab(n_film, n_cover, n_substrate, thickness, wavelength_m, polarization=TE) -> SlabMode:
    """Solve the asymmetric three-layer slab for its fundamental mode.

    Raises CutoffError if no guided mode exists (distinct from numerical
    failure, which surfaces as PhysicsError).
    """
    polarization = _check_polarization(polarization)
    if thickness <= 0 or wavelength_m <= 0:
        raise ValidationError("thickness and wavelength must be positive")
    n_lo = max(n_cover, n_substrate)
    if n_film <= n_lo:
        raise CutoffError(
            f"film index {n_film:.4f} does not exceed cladding index {n_lo:.4f}: "
            "no guided mode"
        )
    k0 = 2.0 * math.pi / wavelength_m

    def f(n):
        return _slab_dispersion(n, k0, thickness, n_film, n_cover, n_substrate, polarization)

    span = n_film - n_lo
    lo = n_lo + 1e-12 * max(1.0, n_lo)
    hi = n_film - 1e-12 * max(1.0, n_film)
    if f(lo) <= 0.0:
        raise CutoffError(
            f"fundamental {polarization} mode below cutoff "
            f"(film {n_film:.4f}, claddings {n_cover:.4f}/{n_substrate:.4f}, "
            f"t = {thickness * 1e9:.0f} nm, lambda = {wavelength_m * 1e9:.1f} nm)"
        )
    # f is monotone decreasing from >0 to -pi; scan then bisect for robustness.
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    vals = np.array([f(n) for n in grid])
    idx = np.nonzero(np.diff(np.signbit(vals)))[0]
    if idx.size == 0:
        raise PhysicsError("slab dispersion root not bracketed (numerical failure)")
    a, b = grid[idx[0]], grid[idx[0] + 1]
    n_eff = brentq(f, a, b, xtol=_NEFF_TOL)

    kap = k0 * math.sqrt(n_film**2 - n_eff**2)
    g_c = k0 * math.sqrt(n_eff**2 - n_cover**2)
    g_s = k0 * math.sqrt(n_eff**2 - n_substrate**2)
    rho_c = (n_film / n_cover) ** 2 if polarization == TM else 1.0
    rho_s = (n_film / n_substrate) ** 2 if polarization == TM else 1.0
    phi = math.atan2(rho_s * g_s, kap)
    return SlabMode(
        n_eff=n_eff,
        thickness=thickness,
        kappa=kap,
        gamma_sub=g_s,
        gamma_cov=g_c,
        phi=phi,
        polarization=polarization,
    )


def slab_effective_index(n_film, n_cover, n_substrate, thickness, wavelength_m,
                         polarization=TE) -> float:
    """Effective index of the fundamental slab mode (see solve_slab)."""
    return solve_slab(n_film, n_cover, n_substrate, thickness, wavelength_m,
                      polarization).n_eff


@dataclass(frozen=True)
class EimMode:
    """Composite effective-index-method solution at one wavelength."""

    wavelength: float
    polarization: str
    n_eff: float
    vertical: SlabMode
    horizontal: SlabMode

    def effective_area(self) -> float:
        """A_eff = (integral |E|^2)^2 / integral |E|^4 for the separable profile."""
        return self.vertical.width_1d() * self.horizontal.width_1d()


def solve_mode(db: MaterialDb, geometry: WaveguideGeometry, wavelength_m: float,
               polarization: str = TE) -> EimMode:
    """Effective-index-method mode solve of a rectangular strip waveguide."""
    polarization = _check_polarization(polarization)
    n_core = refractive_index(db, geometry.core, wavelength_m)
    n_top = refractive_index(db, geometry.top_clad, wavelength_m)
    n_sub = refractive_index(db, geometry.substrate, wavelength_m)
    n_clad_max = max(n_top, n_sub)
    vertical = solve_slab(n_core, n_top, n_sub, geometry.height, wavelength_m, polarization)
    # Scalar continuity conditions in the lateral direction (see module docstring).
    horizontal = solve_slab(vertical.n_eff, n_top, n_top, geometry.width, wavelength_m, TE)
    n_eff = horizontal.n_eff
    if not (n_clad_max < n_eff < n_core):
        raise CutoffError(
            f"composite mode unguided at lambda = {wavelength_m * 1e9:.1f} nm: "
            f"n_eff = {n_eff:.4f} outside ({n_clad_max:.4f}, {n_core:.4f})"
        )
    return EimMode(
        wavelength=wavelength_m,
        polarization=polarization,
        n_eff=n_eff,
        vertical=vertical,
        horizontal=horizontal,
    )


def effective_index(db: MaterialDb, geometry: WaveguideGeometry, wavelength_m: float,
                    polarization: str = TE) -> float:
    """Effective index of the fundamental quasi-TE/TM mode."""
    return solve_mode(db, geometry, wavelength_m, polarization).n_eff


def effective_area(db: MaterialDb, geometry: WaveguideGeometry, wavelength_m: float,
                   polarization: str = TE) -> float:
    """Effective mode area (m^2) from the separable scalar profile."""
    return solve_mode(db, geometry, wavelength_m, polarization).effective_area()


def effective_area_from_profile(x, fx, y, fy) -> float:
    """A_eff of a separable sampled profile E(x, y) = fx(x) fy(y), by quadrature."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    fx2 = np.asarray(fx, float) ** 2
    fy2 = np.asarray(fy, float) ** 2
    i2x = np.trapezoid(fx2, x)
    i4x = np.trapezoid(fx2**2, x)
    i2y = np.trapezoid(fy2, y)
    i4y = np.trapezoid(fy2**2, y)
    if i4x <= 0.0 or i4y <= 0.0:
        raise ValidationError("profile must be non-zero")
    return (i2x * i2y) ** 2 / (i4x * i4y)


def nonlinear_coefficient(a_eff_m2: float, n2_m2_w: float, wavelength_m: float) -> float:
    """Kerr nonlinear coefficient gamma = 2 pi n2 / (lambda A_eff), W^-1 m^-1."""
    for name, v in (("A_eff", a_eff_m2), ("n2", n2_m2_w), ("wavelength", wavelength_m)):
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be positive, got {v!r}")
    return 2.0 * math.pi * n2_m2_w / (wavelength_m * a_eff_m2)


@dataclass
class DispersionProfile:
    """Tabulated propagation constant and derived quantities on an omega grid.

    omega is strictly increasing; beta in rad/m; beta2 in s^2/m; gamma in
    W^-1 m^-1; n_eff dimensionless. Cubic-spline accessors interpolate
    between nodes and refuse evaluation outside the table.
    """

    omega: np.ndarray
    beta: np.ndarray
    beta2: np.ndarray
    gamma: np.ndarray
    n_eff: np.ndarray
    geometry: WaveguideGeometry | None = None
    polarization: str = TE
    _splines: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, float)
        self.beta = np.asarray(self.beta, float)
        self.beta2 = np.asarray(self.beta2, float)
        self.gamma = np.asarray(self.gamma, float)
        self.n_eff = np.asarray(self.n_eff, float)
        n = self.omega.size
        if any(a.shape != (n,) for a in (self.beta, self.beta2, self.gamma, self.n_eff)):
            raise ValidationError("profile arrays must share the omega grid length")
        if n < 5 or np.any(np.diff(self.omega) <= 0):
            raise ValidationError("omega grid must be strictly increasing with >= 5 points")

    @classmethod
    def from_beta(cls, omega, beta, gamma=1.0, **kwargs) -> "DispersionProfile":
        """Build a profile from beta(omega) alone (tests, synthetic media)."""
        omega = np.asarray(omega, float)
        beta = np.asarray(beta, float)
        gamma_arr = np.broadcast_to(np.asarray(gamma, float), omega.shape).copy()
        beta2 = second_derivative_on_grid(omega, beta)
        n_eff = beta * C_LIGHT / omega
        return cls(omega=omega, beta=beta, beta2=beta2, gamma=gamma_arr, n_eff=n_eff,
                   **kwargs)

    @property
    def omega_min(self) -> float:
        return float(self.omega[0])

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])

    def covers(self, omega) -> bool:
        omega = np.asarray(omega, float)
        return bool(np.all(omega >= self.omega_min) and np.all(omega <= self.omega_max))

    def _spline(self, key: str) -> CubicSpline:
        if key not in self._splines:
            self._splines[key] = CubicSpline(self.omega, getattr(self, key))
        return self._splines[key]

    def _eval(self, key: str, omega):
        if not self.covers(omega):
            raise PhysicsError(
                f"frequency outside dispersion table "
                f"[{self.omega_min:.6g}, {self.omega_max:.6g}] rad/s"
            )
        out = self._spline(key)(omega)
        return out if np.ndim(out) else float(out)

    def beta_at(self, omega):
        return self._eval("beta", omega)

    def beta1_at(self, omega):
        """Group delay per length d(beta)/d(omega), s/m."""
        if not self.covers(omega):
            raise PhysicsError("frequency outside dispersion table")
        out = self._spline("beta").derivative(1)(omega)
        return out if np.ndim(out) else float(out)

    def beta2_at(self, omega):
        return self._eval("beta2", omega)

    def gamma_at(self, omega):
        return self._eval("gamma", omega)

    def d_at_wavelength(self, wavelength_m):
        """Dispersion parameter D (ps nm^-1 km^-1) at a vacuum wavelength."""
        omega = wavelength_to_angular_frequency(wavelength_m)
        return dispersion_parameter_ps_nm_km(self.beta2_at(omega), wavelength_m)

    def wavelengths(self) -> np.ndarray:
        """Node wavelengths (m), descending as omega ascends."""
        return 2.0 * math.pi * C_LIGHT / self.omega


def propagation_constant_table(db: MaterialDb, geometry: WaveguideGeometry,
                               lambda_range, n_points: int = 256,
                               polarization: str = TE,
                               n2: float = N2_DEFAULT) -> DispersionProfile:
    """Tabulate beta(omega) on a uniform omega grid, with beta2 and gamma.

    lambda_range is (lambda_min, lambda_max) in meters. Each grid point is an
    independent mode solve; a cutoff anywhere aborts with the first failing
    wavelength named.
    """
    lam_lo, lam_hi = sorted(float(v) for v in lambda_range)
    if n_points < 64:
        raise ValidationError(f"n_points must be >= 64, got {n_points}")
    if lam_lo <= 0:
        raise ValidationError("wavelengths must be positive")
    omega = np.linspace(
        wavelength_to_angular_frequency(lam_hi),
        wavelength_to_angular_frequency(lam_lo),
        n_points,
    )
    n_eff = np.empty(n_points)
    a_eff = np.empty(n_points)
    for i, om in enumerate(omega):
        lam = angular_frequency_to_wavelength(om)
        try:
            mode = solve_mode(db, geometry, lam, polarization)
        except CutoffError as exc:
            raise CutoffError(f"cutoff at lambda = {lam * 1e9:.1f} nm: {exc}") from None
        n_eff[i] = mode.n_eff
        a_eff[i] = mode.effective_area()
    beta = n_eff * omega / C_LIGHT
    if np.any(np.diff(beta) <= 0):
        raise PhysicsError("tabulated beta(omega) is not strictly increasing")
    beta2 = second_derivative_on_grid(omega, beta)
    lam_grid = 2.0 * math.pi * C_LIGHT / omega
    gamma = 2.0 * math.pi * n2 / (lam_grid * a_eff)
    return DispersionProfile(
        omega=omega, beta=beta, beta2=beta2, gamma=gamma, n_eff=n_eff,
        geometry=geometry, polarization=polarization,
    )


def zero_dispersion_wavelengths(profile: DispersionProfile) -> list:
    """All zero crossings of beta2, as wavelengths (m), ascending.

    Empty list when beta2 does not change sign anywhere on the table.
    """
    spline = profile._spline("beta2")
    b2 = profile.beta2
    roots = []
    for i in range(b2.size - 1):
        lo, hi = profile.omega[i], profile.omega[i + 1]
        if b2[i] == 0.0:
            roots.append(float(lo))
        elif b2[i] * b2[i + 1] < 0.0:
            roots.append(float(brentq(spline, lo, hi, xtol=1e-3, rtol=1e-14)))
    if b2[-1] == 0.0:
        roots.append(float(profile.omega[-1]))
    lambdas = sorted(2.0 * math.pi * C_LIGHT / om for om in roots)
    return lambdas


PROFILE_CSV_COLUMNS = (
    "lambda_nm", "omega_rad_s", "n_eff", "beta_rad_m", "beta2_s2_m",
    "D_ps_nm_km", "gamma_W_m",
)


def profile_csv_rows(profile: DispersionProfile):
    """Rows for the dispersion CSV export, one per grid point (omega ascending)."""
    lam_nm = profile.wavelengths() * 1e9
    d = dispersion_parameter_ps_nm_km(profile.beta2, profile.wavelengths())
    for i in range(profile.omega.size):
        yield (
            lam_nm[i], profile.omega[i], profile.n_eff[i], profile.beta[i],
            profile.beta2[i], d[i], profile.gamma[i],
        )
