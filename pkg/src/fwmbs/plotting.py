"""Figure rendering for the CLI report path (PNG files next to each CSV)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path, config_sha256=None):
    meta = {"Software": "fwmbs"}
    if config_sha256:
        meta["Description"] = f"config_sha256={config_sha256}"
    fig.savefig(path, dpi=150, metadata=meta)
    plt.close(fig)


def plot_dispersion(lambda_nm, d_ps_nm_km, zdw_nm, path, config_sha256=None):
    """Dispersion parameter vs wavelength with zero crossings marked."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(lambda_nm, d_ps_nm_km, lw=1.5)
    ax.axhline(0.0, color="0.6", lw=0.8)
    for z in zdw_nm:
        ax.axvline(z, color="tab:red", lw=0.8, ls="--")
        ax.annotate(f"{z:.0f} nm", (z, 0), textcoords="offset points",
                    xytext=(4, 6), fontsize=8, color="tab:red")
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("D (ps nm$^{-1}$ km$^{-1}$)")
    _save(fig, path, config_sha256)


def plot_phase_matching_curve(lambda_i_nm, eta_norm, path, config_sha256=None):
    """Normalized idler power vs idler wavelength (log scale shows sidelobes)."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    order = np.argsort(lambda_i_nm)
    floor = 1e-8
    ax.semilogy(np.asarray(lambda_i_nm)[order],
                np.clip(np.asarray(eta_norm)[order], floor, None), lw=1.2)
    ax.set_xlabel("idler wavelength (nm)")
    ax.set_ylabel("normalized idler power")
    ax.set_ylim(floor, 2.0)
    _save(fig, path, config_sha256)


def plot_spectrum(lambda_nm, power_dbm, path, config_sha256=None):
    """Output optical spectrum after propagation."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    order = np.argsort(lambda_nm)
    ax.plot(np.asarray(lambda_nm)[order], np.asarray(power_dbm)[order],
            lw=0.8, marker=".", ms=2.5, ls="none")
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("power (dBm)")
    _save(fig, path, config_sha256)


def plot_sweep(axis_values, eta_plus, eta_minus, axis_label, path,
               config_sha256=None):
    """Conversion efficiency of both idlers along a sweep axis."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(axis_values, eta_plus, marker="o", ms=3.5, lw=1.2, label=r"$\eta_+$")
    ax.plot(axis_values, eta_minus, marker="s", ms=3.5, lw=1.2, label=r"$\eta_-$")
    ax.set_xlabel(axis_label)
    ax.set_ylabel("conversion efficiency")
    ax.legend()
    _save(fig, path, config_sha256)
