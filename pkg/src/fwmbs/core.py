"""Unit-safe scalar conversions and dispersion calculus.

Internally everything is SI: wavelengths in meters, angular frequencies in
rad/s, propagation constants in rad/m, group-velocity dispersion beta2 in
s^2/m. The dispersion parameter D is kept in s/m^2 internally and converted
to the conventional ps/(nm km) only for display/export (1 s/m^2 = 1e6
ps nm^-1 km^-1).

Sign convention: beta2 > 0 means normal dispersion, equivalently D < 0.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import ValidationError

# Conversion factor: D [s/m^2] -> D [ps/(nm km)]
D_SI_TO_PS_NM_KM = 1e6


def _check_positive_finite(value, name: str):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return arr if arr.ndim else float(arr)


def wavelength_to_angular_frequency(wavelength_m):
    """Vacuum wavelength (m) to angular frequency (rad/s), omega = 2 pi c / lambda."""
    lam = _check_positive_finite(wavelength_m, "wavelength")
    return 2.0 * np.pi * C_LIGHT / lam


def angular_frequency_to_wavelength(omega_rad_s):
    """Angular frequency (rad/s) to vacuum wavelength (m). Self-inverse map."""
    omega = _check_positive_finite(omega_rad_s, "angular frequency")
    return 2.0 * np.pi * C_LIGHT / omega


def dispersion_parameter(beta2_s2_m, wavelength_m):
    """Dispersion parameter D = -(2 pi c / lambda^2) beta2, in s/m^2."""
    lam = _check_positive_finite(wavelength_m, "wavelength")
    beta2 = np.asarray(beta2_s2_m, dtype=float)
    if not np.all(np.isfinite(beta2)):
        raise ValidationError(f"beta2 must be finite, got {beta2_s2_m!r}")
    d = -(2.0 * np.pi * C_LIGHT / lam**2) * beta2
    return d if np.ndim(d) else float(d)


def dispersion_parameter_ps_nm_km(beta2_s2_m, wavelength_m):
    """Dispersion parameter in the conventional ps nm^-1 km^-1 units."""
    return dispersion_parameter(beta2_s2_m, wavelength_m) * D_SI_TO_PS_NM_KM


def _fd_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the `order`-th derivative at x0.

    Fornberg's recursion, valid for arbitrarily spaced nodes. Exact for
    polynomials up to degree len(nodes)-1.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    w = np.zeros((n, order + 1))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[i, k] = c1 * (k * w[i - 1, k - 1] - c5 * w[i - 1, k]) / c2
                w[i, 0] = -c1 * c5 * w[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[j, k] = (c4 * w[j, k] - k * w[j, k - 1]) / c3
            w[j, 0] = c4 * w[j, 0] / c3
        c1 = c2
    return w[:, order]


def second_derivative_on_grid(x, y):
    """Second derivative of tabulated y(x) on a strictly monotone grid.

    Interior points use the 3-point (non-uniform) central stencil; the two
    endpoints use one-sided 4-point stencils. Both are second-order accurate
    and exact for quadratics.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValidationError("x and y must be 1-D arrays of equal length")
    if x.size < 5:
        raise ValidationError(f"need at least 5 grid points, got {x.size}")
    d = np.diff(x)
    if not (np.all(d > 0.0) or np.all(d < 0.0)):
        raise ValidationError("grid must be strictly monotone")

    out = np.empty_like(y)
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    out[1:-1] = 2.0 * (y[:-2] * hr - y[1:-1] * (hl + hr) + y[2:] * hl) / (hl * hr * (hl + hr))
    out[0] = _fd_weights(x[:4] - x[0], 0.0, 2) @ y[:4]
    out[-1] = _fd_weights(x[-4:] - x[-1], 0.0, 2) @ y[-4:]
    return out
