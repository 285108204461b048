"""Full-bandwidth split-step Fourier propagation of a single complex envelope.

One envelope carries pumps, signal, idlers, and every parasitic mixing
product at once, so pump depletion, pump-pump four-wave mixing, and
degenerate sidebands are captured without the approximations of the
analytic coupled-mode model.

Conventions. The envelope a(t) rides on a carrier omega_0; a tone at
absolute frequency omega_0 + Omega is exp(-i Omega t), whose discrete
spectrum coefficient lives at the FFT bin with cyclic frequency
-Omega / 2 pi. Spectral bin powers are |fft(a)/n|^2, which sum to the
total envelope power mean(|a|^2) (Parseval), so a CW tone's bin reads
its power in watts directly.

Each Strang step applies a half dispersion step in the frequency domain
with the exact tabulated phase exp(i [beta(omega) - beta0 -
beta1 (omega - omega0)] h / 2), a full Kerr step a -> a exp(i gamma
|a|^2 h) in the time domain, then the second dispersion half. The
per-step nonlinear phase is required to stay below 0.05 rad.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.fft import fft, ifft, fftfreq

from .cmt import BraggScatteringSetup
from .errors import (
    PhysicsError,
    SpectralOverflowError,
    StepSizeError,
    ValidationError,
)
from .modesolver import DispersionProfile

# Grid construction limits.
MIN_POINTS = 2**10
MAX_POINTS = 2**22
SNAP_REL_TOL = 1e-6      # max relative frequency error when snapping a tone
NL_PHASE_BOUND = 0.05    # hard per-step Kerr phase bound, rad
OUT_OF_BAND_LIMIT = 0.01  # max power fraction outside the dispersion table


@dataclass(frozen=True)
class Tone:
    """A CW spectral line: absolute angular frequency, power, phase."""

    omega: float
    power: float
    phase: float = 0.0

    def __post_init__(self):
        if self.omega <= 0 or not math.isfinite(self.omega):
            raise ValidationError(f"tone frequency must be positive, got {self.omega!r}")
        if self.power < 0 or not math.isfinite(self.power):
            raise ValidationError(f"tone power must be >= 0, got {self.power!r}")


@dataclass(frozen=True)
class TimeFrequencyGrid:
    """Periodic time window with matched frequency bins."""

    n_points: int
    time_window: float
    carrier_omega: float

    def __post_init__(self):
        n = self.n_points
        if n < MIN_POINTS or n & (n - 1):
            raise ValidationError(f"n_points must be a power of two >= {MIN_POINTS}")
        if self.time_window <= 0 or self.carrier_omega <= 0:
            raise ValidationError("time_window and carrier_omega must be positive")

    @property
    def dt(self) -> float:
        return self.time_window / self.n_points

    @property
    def domega(self) -> float:
        """Angular-frequency bin spacing, 2 pi / time_window."""
        return 2.0 * math.pi / self.time_window

    @property
    def span(self) -> float:
        """Total angular-frequency span n_points * domega."""
        return self.n_points * self.domega

    def omega_offsets(self) -> np.ndarray:
        """Per-bin offset from the carrier, rad/s, in FFT storage order."""
        return -2.0 * math.pi * fftfreq(self.n_points, self.dt)

    def omegas(self) -> np.ndarray:
        return self.carrier_omega + self.omega_offsets()

    def snap(self, omega: float):
        """Nearest-bin snap: (bin offset index, snapped omega, relative error)."""
        q = round((omega - self.carrier_omega) / self.domega)
        if abs(q) > self.n_points // 2 - 1:
            raise ValidationError(
                f"frequency {omega:.6g} rad/s outside the grid span"
            )
        snapped = self.carrier_omega + q * self.domega
        return q, snapped, abs(snapped - omega) / omega

    def bin_of_offset_index(self, q: int) -> int:
        """FFT array index of the bin at carrier + q * domega."""
        return (-q) % self.n_points


def build_grid(tones, margin_factor: float = 1.5, snap_rel: float = SNAP_REL_TOL,
               max_points: int = MAX_POINTS) -> TimeFrequencyGrid:
    """Choose carrier, window, and size so every tone snaps onto a bin.

    The carrier is the mean of the extreme tone frequencies; the span is at
    least margin_factor times the tone spread; the bin spacing keeps the
    worst-case snap error below snap_rel relative.
    """
    tones = list(tones)
    if not tones:
        raise ValidationError("need at least one tone")
    if margin_factor < 1.0:
        raise ValidationError(f"margin_factor must be >= 1, got {margin_factor!r}")
    omegas = np.array([t.omega for t in tones], dtype=float)
    om_lo, om_hi = float(omegas.min()), float(omegas.max())
    carrier = 0.5 * (om_lo + om_hi)
    spread = om_hi - om_lo
    # Worst-case snap error is domega/2; hold it at 95 % of the allowance.
    domega = 1.9 * snap_rel * om_lo
    span_needed = max(margin_factor * spread, MIN_POINTS * domega)
    n = MIN_POINTS
    while n * domega < span_needed:
        n *= 2
        if n > max_points:
            raise ValidationError(
                f"required span {span_needed:.3e} rad/s needs more than "
                f"{max_points} grid points; narrow the tone layout or relax "
                "the margin"
            )
    return TimeFrequencyGrid(n_points=n, time_window=2.0 * math.pi / domega,
                             carrier_omega=carrier)


@dataclass
class FieldEnvelope:
    """Complex field samples (sqrt(W)) on a periodic time window."""

    grid: TimeFrequencyGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n_points,):
            raise ValidationError("samples must match the grid length")

    def total_power(self) -> float:
        """Window-averaged power, watts."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def spectrum(self) -> np.ndarray:
        """Complex spectral coefficients, FFT order; |.|^2 is bin power in W."""
        return fft(self.samples) / self.grid.n_points

    def spectrum_power(self) -> np.ndarray:
        return np.abs(self.spectrum()) ** 2


def inject_cw_tones(grid: TimeFrequencyGrid, tones) -> FieldEnvelope:
    """Build an envelope whose spectrum has one nonzero bin per tone."""
    coeffs = np.zeros(grid.n_points, dtype=complex)
    occupied = {}
    for tone in tones:
        q, _, rel_err = grid.snap(tone.omega)
        if rel_err >= SNAP_REL_TOL:
            raise ValidationError(
                f"tone at {tone.omega:.6g} rad/s snaps with relative error "
                f"{rel_err:.2e} >= {SNAP_REL_TOL:g}"
            )
        k = grid.bin_of_offset_index(q)
        if k in occupied:
            raise ValidationError(
                f"tones at {occupied[k]:.6g} and {tone.omega:.6g} rad/s collide "
                "on one grid bin"
            )
        occupied[k] = tone.omega
        coeffs[k] = math.sqrt(tone.power) * np.exp(1j * tone.phase)
    samples = ifft(coeffs) * grid.n_points
    return FieldEnvelope(grid=grid, samples=samples)


def inject_super_gaussian(grid: TimeFrequencyGrid, peak_power: float,
                          fwhm: float, order: int = 1,
                          omega: float | None = None) -> FieldEnvelope:
    """Super-Gaussian pulse centered in the window (quasi-CW checks).

    fwhm is the full width at half maximum of the power profile; order 1 is
    Gaussian, higher orders approach a flat top.
    """
    if peak_power < 0 or fwhm <= 0 or order < 1:
        raise ValidationError("need peak_power >= 0, fwhm > 0, order >= 1")
    t = np.arange(grid.n_points) * grid.dt
    t0 = 0.5 * grid.time_window
    envelope = np.sqrt(peak_power) * np.exp(
        -0.5 * math.log(2.0) * np.abs((t - t0) / (0.5 * fwhm)) ** (2 * order)
    )
    if omega is None:
        omega = grid.carrier_omega
    q, snapped, rel_err = grid.snap(omega)
    if rel_err >= SNAP_REL_TOL:
        raise ValidationError("pulse carrier does not snap onto the grid")
    offset = snapped - grid.carrier_omega
    samples = envelope * np.exp(-1j * offset * t)
    return FieldEnvelope(grid=grid, samples=samples)


@dataclass(frozen=True)
class PropagationSpec:
    """Inputs of one split-step run."""

    profile: DispersionProfile
    gamma: float          # Kerr coefficient at the grid carrier, W^-1 m^-1
    length: float
    step: float
    loss_db_per_m: float = 0.0

    def __post_init__(self):
        if self.length < 0:
            raise ValidationError("length must be >= 0")
        if self.step <= 0 or self.step > max(self.length, np.finfo(float).tiny):
            raise ValidationError("step must be positive and <= length")
        if self.loss_db_per_m < 0:
            raise ValidationError("loss must be >= 0")


@dataclass(frozen=True)
class PropagationLog:
    steps: int
    step: float
    max_nonlinear_phase: float
    conservation_error: float      # relative power change (meaningful when lossless)
    max_out_of_band_fraction: float


def _dispersion_phase(grid: TimeFrequencyGrid, profile: DispersionProfile):
    """Per-bin co-moving dispersion phase rate theta(omega), rad/m, plus the
    mask of bins outside the table (evaluated with clamped beta there).

    Cached on the profile per grid: power sweeps reuse the same pair.
    """
    key = ("ssfm_theta", grid.n_points, grid.time_window, grid.carrier_omega)
    if key in profile._splines:
        return profile._splines[key]
    om0 = grid.carrier_omega
    if not profile.covers(om0):
        raise PhysicsError("grid carrier outside the dispersion table")
    omegas = grid.omegas()
    outside = (omegas < profile.omega_min) | (omegas > profile.omega_max)
    clamped = np.clip(omegas, profile.omega_min, profile.omega_max)
    beta0 = profile.beta_at(om0)
    beta1 = profile.beta1_at(om0)
    theta = profile.beta_at(clamped) - beta0 - beta1 * (omegas - om0)
    profile._splines[key] = (theta, outside)
    return theta, outside


def propagate(field: FieldEnvelope, spec: PropagationSpec):
    """Symmetrized split-step propagation; returns (field, PropagationLog).

    Raises StepSizeError if any step accumulates >= 0.05 rad of Kerr phase
    and SpectralOverflowError if more than 1 % of the power leaves the
    dispersion table's frequency coverage.
    """
    grid = field.grid
    theta, outside = _dispersion_phase(grid, spec.profile)
    n_full = int(math.floor(spec.length / spec.step + 1e-9))
    remainder = spec.length - n_full * spec.step
    if remainder < 1e-9 * spec.step:
        remainder = 0.0
    steps = [spec.step] * n_full + ([remainder] if remainder else [])
    if not steps:
        return FieldEnvelope(grid=grid, samples=field.samples.copy()), PropagationLog(
            steps=0, step=spec.step, max_nonlinear_phase=0.0,
            conservation_error=0.0, max_out_of_band_fraction=0.0,
        )

    alpha = spec.loss_db_per_m * math.log(10.0) / 10.0  # power Np/m
    p_in = field.total_power()
    a = field.samples.copy()
    max_phi = 0.0
    max_out = 0.0
    check_overflow = bool(outside.any())

    for h in steps:
        half = np.exp((1j * theta - 0.5 * alpha) * (0.5 * h))
        spec_coeffs = fft(a) * half
        if check_overflow:
            total = float(np.sum(np.abs(spec_coeffs) ** 2))
            if total > 0.0:
                frac = float(np.sum(np.abs(spec_coeffs[outside]) ** 2)) / total
                max_out = max(max_out, frac)
                if frac > OUT_OF_BAND_LIMIT:
                    raise SpectralOverflowError(
                        f"{frac:.2%} of the power lies outside the dispersion "
                        "table; extend the table or reduce power/length"
                    )
        a = ifft(spec_coeffs)
        phi = spec.gamma * np.abs(a) ** 2 * h
        phi_max = float(phi.max())
        max_phi = max(max_phi, phi_max)
        if phi_max >= NL_PHASE_BOUND:
            raise StepSizeError(
                f"nonlinear phase {phi_max:.3f} rad per step exceeds "
                f"{NL_PHASE_BOUND} rad; reduce the step below "
                f"{spec.step * NL_PHASE_BOUND / phi_max:.3e} m"
            )
        a = a * np.exp(1j * phi)
        a = ifft(fft(a) * half)

    out = FieldEnvelope(grid=grid, samples=a)
    p_out = out.total_power()
    cons = abs(p_out - p_in) / p_in if (p_in > 0 and alpha == 0.0) else 0.0
    return out, PropagationLog(
        steps=len(steps), step=spec.step, max_nonlinear_phase=max_phi,
        conservation_error=cons, max_out_of_band_fraction=max_out,
    )


def band_power(field: FieldEnvelope, omega_center: float, bandwidth: float) -> float:
    """Total spectral power (W) in bins within +/- bandwidth/2 of omega_center."""
    if bandwidth <= 0:
        raise ValidationError("bandwidth must be positive")
    omegas = field.grid.omegas()
    mask = np.abs(omegas - omega_center) <= 0.5 * bandwidth
    if not mask.any():
        raise ValidationError(
            f"empty band: no grid bins within {bandwidth:.3e} rad/s of "
            f"{omega_center:.6g} rad/s"
        )
    return float(np.sum(field.spectrum_power()[mask]))


@dataclass(frozen=True)
class GridPolicy:
    """Knobs of the turnkey Bragg-scattering experiment."""

    margin_factor: float = 1.5
    signal_power_fraction: float = 1e-6  # of the weakest positive pump
    fallback_signal_power: float = 1e-9  # W, used when both pumps are off
    band_bins: int = 5                   # measurement bandwidth in bins
    nl_phase_target: float = 0.03        # per-step Kerr phase aimed for, rad
    min_steps: int = 4
    step: float | None = None            # explicit step overrides the target
    loss_db_per_m: float = 0.0


@dataclass(frozen=True)
class BsExperimentResult:
    eta_plus: float
    eta_minus: float
    omega_i_plus: float
    omega_i_minus: float
    signal_power: float
    field: FieldEnvelope
    grid: TimeFrequencyGrid
    log: PropagationLog
    snap_errors: tuple  # relative snap error per injected tone

    @property
    def conserved_power_error(self) -> float:
        return self.log.conservation_error


def bs_conversion_experiment(setup: BraggScatteringSetup,
                             policy: GridPolicy = GridPolicy()) -> BsExperimentResult:
    """Inject pumps + weak signal, propagate, and report both idler efficiencies.

    eta(+/-) is band power around each idler divided by the injected signal
    power. The signal power defaults to signal_power_fraction times the
    weakest positive pump.
    """
    p_sig = setup.signal_power
    if p_sig <= 0.0:
        positive = [p for p in (setup.p1, setup.p2) if p > 0.0]
        p_sig = (policy.signal_power_fraction * min(positive)
                 if positive else policy.fallback_signal_power)

    tones = [
        Tone(setup.omega_p1, setup.p1),
        Tone(setup.omega_p2, setup.p2),
        Tone(setup.omega_s, p_sig),
    ]
    grid = build_grid(tones, margin_factor=policy.margin_factor)
    snapped = [grid.snap(t.omega) for t in tones]
    snap_errors = tuple(s[2] for s in snapped)
    injected = [replace(t, omega=s[1]) for t, s in zip(tones, snapped)]
    field = inject_cw_tones(grid, injected)

    gamma_c = setup.profile.gamma_at(grid.carrier_omega)
    if setup.length == 0.0:
        out = field
        log = PropagationLog(steps=0, step=0.0, max_nonlinear_phase=0.0,
                             conservation_error=0.0, max_out_of_band_fraction=0.0)
    else:
        if policy.step is not None:
            step = policy.step
            retries = 0  # explicit step: the caller owns convergence
        else:
            peak_power = sum(math.sqrt(t.power) for t in injected) ** 2
            if gamma_c * peak_power > 0.0:
                step = policy.nl_phase_target / (gamma_c * peak_power)
            else:
                step = setup.length
            n_steps = max(policy.min_steps,
                          math.ceil(setup.length / max(step, 1e-300)))
            step = setup.length / n_steps
            retries = 4  # mixing products can beat above the injected peak
        while True:
            try:
                out, log = propagate(field, PropagationSpec(
                    profile=setup.profile, gamma=gamma_c, length=setup.length,
                    step=step, loss_db_per_m=policy.loss_db_per_m,
                ))
                break
            except StepSizeError:
                if retries <= 0:
                    raise
                retries -= 1
                step *= 0.5

    # Idler bins from exact bin-index arithmetic on the snapped tones.
    q1, q2, qs = (s[0] for s in snapped)
    q_plus, q_minus = q2 + (qs - q1), q2 - (qs - q1)
    omega_i_plus = grid.carrier_omega + q_plus * grid.domega
    omega_i_minus = grid.carrier_omega + q_minus * grid.domega
    bw = policy.band_bins * grid.domega
    eta_plus = band_power(out, omega_i_plus, bw) / p_sig
    eta_minus = band_power(out, omega_i_minus, bw) / p_sig
    return BsExperimentResult(
        eta_plus=eta_plus, eta_minus=eta_minus,
        omega_i_plus=omega_i_plus, omega_i_minus=omega_i_minus,
        signal_power=p_sig, field=out, grid=grid, log=log,
        snap_errors=snap_errors,
    )
