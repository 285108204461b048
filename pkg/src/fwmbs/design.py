"""Inverse design: connect a single-photon-emitter wavelength to 1550 nm.

Recipe: place the zero-dispersion wavelength at the average of the emitter
and telecom wavelengths by tuning the waveguide width at fixed thickness,
put one pump a few nm from the emitter line and the other at the telecom
wavelength, check that both pumps sit in normal dispersion (modulation
instability screening), then compute the pump power for the target
conversion efficiency twice: an analytic phase-matched lower bound, and a
split-step power sweep that includes the residual mismatch and every
parasitic mixing process.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import second_derivative_on_grid, wavelength_to_angular_frequency
from .cmt import BraggScatteringSetup
from .errors import (
    CutoffError,
    MaterialEvalError,
    UnreachableTargetError,
    ValidationError,
)
from .materials import MaterialDb
from .modesolver import (
    TE,
    N2_DEFAULT,
    WaveguideGeometry,
    propagation_constant_table,
    solve_mode,
    zero_dispersion_wavelengths,
)
from .ssfm import GridPolicy, build_grid, Tone, bs_conversion_experiment

# Emitter presets: NV center in diamond, rubidium, cesium, InAs quantum dot.
EMITTER_PRESETS = {
    "nv637": 637e-9,
    "rb780": 780e-9,
    "cs852": 852e-9,
    "qd980": 980e-9,
}

DEFAULT_WIDTH_RANGE = (0.6e-6, 3.0e-6)
_WIDTH_SCAN_POINTS = 25
_ZDW_TOL = 1e-9          # |lambda_zdw - target| < 1 nm
POWER_CAP_DEFAULT = 50.0  # W per pump for the split-step sweep
NEAR_ZERO_D_PS_NM_KM = 5.0


@dataclass(frozen=True)
class DesignTarget:
    """What to design: emitter wavelength, band, geometry constants, efficiency."""

    lambda_sps: float
    lambda_telecom: float = 1550e-9
    height: float = 550e-9
    length: float = 18e-3
    eta_target: float = 0.25
    pump_offset: float = 6e-9  # pump 1 sits at lambda_sps + pump_offset

    def __post_init__(self):
        if not 0 < self.lambda_sps < self.lambda_telecom:
            raise ValidationError("need 0 < lambda_sps < lambda_telecom")
        if not 0.0 < self.eta_target <= 1.0:
            raise ValidationError("eta_target must be in (0, 1]")
        if self.height <= 0 or self.length <= 0:
            raise ValidationError("height and length must be positive")

    @property
    def zdw_target(self) -> float:
        return 0.5 * (self.lambda_sps + self.lambda_telecom)


@dataclass(frozen=True)
class DesignReport:
    """Inverse-design output; all lengths in meters, powers in watts."""

    target: DesignTarget
    width: float
    lambda_zdw: float
    d_at_sps_pump: float       # ps nm^-1 km^-1 at the short pump
    d_at_telecom_pump: float   # ps nm^-1 km^-1 at 1550 nm
    gamma_p1: float
    gamma_p2: float
    pump_power_analytic: float
    pump_power_ssfm: float | None  # None when the sweep hit the power cap
    eta_at_ssfm_power: float | None
    warnings: tuple = field(default_factory=tuple)

    def to_json(self) -> str:
        payload = {
            "schema": "fwmbs.design_report",
            "schema_version": 1,
            "tool_version": __version__,
            "target": {
                "lambda_sps_nm": self.target.lambda_sps * 1e9,
                "lambda_telecom_nm": self.target.lambda_telecom * 1e9,
                "height_nm": self.target.height * 1e9,
                "length_mm": self.target.length * 1e3,
                "eta_target": self.target.eta_target,
                "pump_offset_nm": self.target.pump_offset * 1e9,
            },
            "width_nm": self.width * 1e9,
            "lambda_zdw_nm": self.lambda_zdw * 1e9,
            "d_at_sps_pump_ps_nm_km": self.d_at_sps_pump,
            "d_at_telecom_pump_ps_nm_km": self.d_at_telecom_pump,
            "gamma_p1_w_m": self.gamma_p1,
            "gamma_p2_w_m": self.gamma_p2,
            "pump_power_analytic_w": self.pump_power_analytic,
            "pump_power_ssfm_w": self.pump_power_ssfm,
            "eta_at_ssfm_power": self.eta_at_ssfm_power,
            "warnings": list(self.warnings),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_text_table(self) -> str:
        """Human-readable one-row design table (lambda, W, P_in)."""
        p = ("n/a" if self.pump_power_ssfm is None
             else f"{self.pump_power_ssfm:.2f} W")
        lines = [
            f"{'lambda':>10}  {'W':>9}  {'P_in':>9}",
            f"{self.target.lambda_sps * 1e9:>7.0f} nm  {self.width * 1e9:>6.0f} nm"
            f"  {p:>9}",
        ]
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def required_pump_power(gamma1: float, gamma2: float, length: float,
                        eta_target: float) -> float:
    """Smallest equal pump power reaching eta_target at perfect phase matching.

    Inverts eta = sin^2(2 sqrt(gamma1 gamma2) P L); an analytic lower bound
    (the full simulation typically needs more).
    """
    if not 0.0 < eta_target <= 1.0:
        raise ValidationError("eta_target must be in (0, 1]")
    if gamma1 <= 0 or gamma2 <= 0 or length <= 0:
        raise ValidationError("gamma1, gamma2, length must be positive")
    return math.asin(math.sqrt(eta_target)) / (2.0 * math.sqrt(gamma1 * gamma2) * length)


def _beta2_at_wavelength(db: MaterialDb, geometry: WaveguideGeometry,
                         wavelength_m: float, polarization: str = TE) -> float:
    """beta2 from a local 5-point stencil around one wavelength."""
    om_c = wavelength_to_angular_frequency(wavelength_m)
    om = om_c + np.linspace(-2, 2, 5) * 6e12
    n_eff = np.array([
        solve_mode(db, geometry, float(2.0 * math.pi * 299792458.0 / o), polarization).n_eff
        for o in om
    ])
    from scipy.constants import c as c_light
    beta = n_eff * om / c_light
    return float(second_derivative_on_grid(om, beta)[2])


def find_width_for_zdw(db: MaterialDb, target_zdw: float, height: float = 550e-9,
                       width_range=DEFAULT_WIDTH_RANGE, polarization: str = TE,
                       geometry_template: WaveguideGeometry | None = None) -> float:
    """Waveguide width whose dispersion crosses zero at target_zdw.

    Scans the width range for sign changes of beta2(target_zdw; width) and
    bisects each bracket. The dispersion pocket is bounded, so up to two
    widths qualify; the widest is returned (better confinement, and the
    inverse of the forward ZDW computation for wide guides).
    """
    def geom(width):
        if geometry_template is not None:
            return WaveguideGeometry(
                width=width, height=height, core=geometry_template.core,
                top_clad=geometry_template.top_clad,
                substrate=geometry_template.substrate,
                length=geometry_template.length,
            )
        return WaveguideGeometry(width=width, height=height)

    def f(width):
        return _beta2_at_wavelength(db, geom(width), target_zdw, polarization)

    def f_or_nan(width):
        try:
            return f(width)
        except (CutoffError, MaterialEvalError):
            return math.nan

    w_lo, w_hi = sorted(width_range)
    widths = np.linspace(w_lo, w_hi, _WIDTH_SCAN_POINTS)
    values = np.array([f_or_nan(w) for w in widths])
    brackets = [
        (widths[i], widths[i + 1])
        for i in range(values.size - 1)
        if values[i] * values[i + 1] < 0.0  # NaN never qualifies
    ]
    if not brackets:
        reachable = set()
        for w in widths[:: max(1, _WIDTH_SCAN_POINTS // 6)]:
            try:
                prof = propagation_constant_table(
                    db, geom(w), (0.7 * target_zdw, 1.6 * target_zdw), 96,
                    polarization)
                reachable.update(zero_dispersion_wavelengths(prof))
            except (CutoffError, MaterialEvalError):
                continue
        if reachable:
            rng = (f"achievable zero-dispersion wavelengths in this width range "
                   f"span [{min(reachable) * 1e9:.0f}, {max(reachable) * 1e9:.0f}] nm")
        else:
            rng = "no zero-dispersion crossing anywhere in this width range"
        raise UnreachableTargetError(
            f"target ZDW {target_zdw * 1e9:.1f} nm unreachable at height "
            f"{height * 1e9:.0f} nm; {rng}"
        )

    candidates = []
    for a, b in brackets:
        fa = f(a)
        while b - a > 0.05e-9:
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fa * fm <= 0.0:
                b = mid
            else:
                a, fa = mid, fm
        candidates.append(0.5 * (a + b))
    width = max(candidates)

    # Verify against the full table root find.
    prof = propagation_constant_table(
        db, geom(width), (0.8 * target_zdw, 1.25 * target_zdw), 128, polarization)
    roots = zero_dispersion_wavelengths(prof)
    if not roots:
        raise UnreachableTargetError(
            f"bisected width {width * 1e9:.1f} nm shows no dispersion zero on "
            "re-evaluation"
        )
    best = min(roots, key=lambda r: abs(r - target_zdw))
    if abs(best - target_zdw) > _ZDW_TOL:
        raise UnreachableTargetError(
            f"width bisection stalled {abs(best - target_zdw) * 1e9:.2f} nm from "
            f"the target ZDW"
        )
    return width


def _eta_best(setup: BraggScatteringSetup, power: float, policy: GridPolicy) -> float:
    from dataclasses import replace
    run = replace(setup, p1=power, p2=power)
    result = bs_conversion_experiment(run, policy)
    return max(result.eta_plus, result.eta_minus)


def _predict_crossing(setup: BraggScatteringSetup, eta_target: float,
                      power_cap: float, profile) -> float:
    """Coupled-mode estimate of the equal-pump power reaching eta_target,
    mirroring the split-step engine (single gamma at the band center)."""
    from .cmt import _conversion_point
    om_mid = 0.5 * (max(setup.omega_p1, setup.omega_p2, setup.omega_s)
                    + min(setup.omega_p1, setup.omega_p2, setup.omega_s))
    gamma_c = profile.gamma_at(om_mid)

    def eta(power):
        vals = []
        for branch in ("plus", "minus"):
            vals.append(_conversion_point(
                profile, setup.omega_p1, setup.omega_p2, setup.omega_s,
                power, power, gamma_c, gamma_c, branch, setup.length).eta)
        return max(vals)

    p = max(setup.p1, 1e-3)
    while p < power_cap:
        if eta(p) >= eta_target:
            return p
        p *= 1.05
    return power_cap


def design_for_sps(db: MaterialDb, target: DesignTarget,
                   power_cap: float = POWER_CAP_DEFAULT,
                   refine: bool = True,
                   grid_policy: GridPolicy = GridPolicy(),
                   width_range=DEFAULT_WIDTH_RANGE) -> DesignReport:
    """Full inverse-design pipeline for one emitter wavelength."""
    warnings = []
    width = find_width_for_zdw(db, target.zdw_target, target.height, width_range)
    geometry = WaveguideGeometry(width=width, height=target.height,
                                 length=target.length)

    lam_p1 = target.lambda_sps + target.pump_offset
    lam_p2 = target.lambda_telecom
    lam_s = target.lambda_sps
    om_p1, om_p2, om_s = (wavelength_to_angular_frequency(l)
                          for l in (lam_p1, lam_p2, lam_s))

    # Cover the margin-expanded tone box (the split-step engine clamps and
    # monitors the grid bins beyond it; they never carry real power).
    om_all = (om_p1, om_p2, om_s)
    om_mid = 0.5 * (max(om_all) + min(om_all))
    half_span = 0.5 * grid_policy.margin_factor * (max(om_all) - min(om_all))
    probe = build_grid([Tone(om_p1, 1.0), Tone(om_p2, 1.0), Tone(om_s, 1.0)],
                       margin_factor=grid_policy.margin_factor)
    pad = 8 * probe.domega
    lam_lo = 2 * math.pi * 299792458.0 / (om_mid + half_span + pad)
    lam_hi = 2 * math.pi * 299792458.0 / (om_mid - half_span - pad)
    profile = propagation_constant_table(db, geometry, (lam_lo, lam_hi), 256)

    # Resolve the achieved ZDW on the same fine table find_width verified on.
    fine = propagation_constant_table(
        db, geometry, (0.8 * target.zdw_target, 1.25 * target.zdw_target), 128)
    roots = zero_dispersion_wavelengths(fine)
    lambda_zdw = min(roots, key=lambda r: abs(r - target.zdw_target))
    d_p1 = profile.d_at_wavelength(lam_p1)
    d_p2 = profile.d_at_wavelength(lam_p2)
    for name, lam, d in (("sps pump", lam_p1, d_p1), ("telecom pump", lam_p2, d_p2)):
        if d > 0.0:
            warnings.append(
                f"{name} at {lam * 1e9:.0f} nm sits in anomalous dispersion "
                f"(D = {d:+.1f} ps/nm/km): modulation instability risk"
            )
        elif abs(d) < NEAR_ZERO_D_PS_NM_KM:
            warnings.append(
                f"{name} at {lam * 1e9:.0f} nm is within "
                f"{NEAR_ZERO_D_PS_NM_KM:g} ps/nm/km of zero dispersion; "
                "fabrication deviations could flip it anomalous"
            )

    gamma_p1 = profile.gamma_at(om_p1)
    gamma_p2 = profile.gamma_at(om_p2)
    p_analytic = required_pump_power(gamma_p1, gamma_p2, target.length,
                                     target.eta_target)

    p_ssfm = None
    eta_at = None
    if refine:
        setup = BraggScatteringSetup(
            omega_p1=om_p1, omega_p2=om_p2, omega_s=om_s,
            p1=p_analytic, p2=p_analytic, gamma1=gamma_p1, gamma2=gamma_p2,
            profile=profile, length=target.length,
        )
        # The residual linear mismatch is known from the profile; seed the
        # sweep near the coupled-mode prediction instead of the ideal bound.
        p_start = max(p_analytic,
                      0.75 * _predict_crossing(setup, target.eta_target,
                                               power_cap, profile))
        p_lo, eta_lo = p_start, _eta_best(setup, p_start, grid_policy)
        if eta_lo >= target.eta_target:
            # Prediction overshot: bisect down toward the analytic bound.
            p_hi, lo = p_start, p_analytic
            while p_hi - lo > 0.05 * p_hi:
                mid = 0.5 * (lo + p_hi)
                if _eta_best(setup, mid, grid_policy) >= target.eta_target:
                    p_hi = mid
                else:
                    lo = mid
            p_ssfm = p_hi
            eta_at = _eta_best(setup, p_hi, grid_policy)
        else:
            crossed = False
            while p_lo * 1.25 <= power_cap:
                p_hi = p_lo * 1.25
                eta_hi = _eta_best(setup, p_hi, grid_policy)
                if eta_hi >= target.eta_target:
                    crossed = True
                    break
                p_lo, eta_lo = p_hi, eta_hi
            if not crossed:
                warnings.append(
                    f"eta_target {target.eta_target:g} not reached below the "
                    f"{power_cap:g} W pump power cap (best eta "
                    f"{eta_lo:.3g} at {p_lo:.2f} W)"
                )
            else:
                while p_hi - p_lo > 0.05 * p_hi:
                    mid = 0.5 * (p_lo + p_hi)
                    if _eta_best(setup, mid, grid_policy) >= target.eta_target:
                        p_hi = mid
                    else:
                        p_lo = mid
                p_ssfm = p_hi
                eta_at = _eta_best(setup, p_hi, grid_policy)

    return DesignReport(
        target=target, width=width, lambda_zdw=lambda_zdw,
        d_at_sps_pump=d_p1, d_at_telecom_pump=d_p2,
        gamma_p1=gamma_p1, gamma_p2=gamma_p2,
        pump_power_analytic=p_analytic, pump_power_ssfm=p_ssfm,
        eta_at_ssfm_power=eta_at, warnings=tuple(warnings),
    )
