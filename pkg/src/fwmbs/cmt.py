"""Analytic coupled-mode model of four-wave-mixing Bragg scattering.

Two strong pumps at omega_1, omega_2 scatter a weak signal at omega_s to
idlers at omega_i = omega_2 +/- (omega_s - omega_1) (wideband rule) or
omega_i = omega_s +/- (omega_2 - omega_1) (narrowband rule). With undepleted
pumps the signal-to-idler conversion efficiency at distance z is

    eta(z) = (4 gamma1 gamma2 P1 P2 / g^2) sin^2(g z),
    g^2    = 4 gamma1 gamma2 P1 P2 + (kappa / 2)^2,

where kappa is the total phase mismatch: a linear part from the propagation
constants of the four waves plus the nonlinear part gamma1 P1 - gamma2 P2.
The g closure above gives eta = 1 exactly at kappa = 0 and is validated
against the split-step engine in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PhysicsError, ValidationError
from .modesolver import DispersionProfile

BRANCH_PLUS = "plus"
BRANCH_MINUS = "minus"


def _check_branch(branch: str) -> str:
    if branch not in (BRANCH_PLUS, BRANCH_MINUS):
        raise ValidationError(f"branch must be 'plus' or 'minus', got {branch!r}")
    return branch


@dataclass(frozen=True)
class BraggScatteringSetup:
    """Two pumps + signal riding on one dispersion profile."""

    omega_p1: float
    omega_p2: float
    omega_s: float
    p1: float
    p2: float
    gamma1: float
    gamma2: float
    profile: DispersionProfile
    length: float
    signal_power: float = 0.0  # 0 means "choose automatically" downstream

    def __post_init__(self):
        freqs = (self.omega_p1, self.omega_p2, self.omega_s)
        if len(set(freqs)) != 3:
            raise ValidationError("pump and signal frequencies must be distinct")
        if not self.profile.covers(np.array(freqs)):
            raise PhysicsError("pump/signal frequency outside the dispersion table")
        if self.p1 < 0 or self.p2 < 0 or self.signal_power < 0:
            raise ValidationError("powers must be >= 0")
        if self.length < 0:
            raise ValidationError("length must be >= 0")


def idler_frequencies(omega_p1: float, omega_p2: float, omega_s: float):
    """Wideband idlers omega_i(+/-) = omega_p2 +/- (omega_s - omega_p1)."""
    for name, v in (("omega_p1", omega_p1), ("omega_p2", omega_p2), ("omega_s", omega_s)):
        if v <= 0:
            raise ValidationError(f"{name} must be positive")
    detuning = omega_s - omega_p1
    plus = omega_p2 + detuning
    minus = omega_p2 - detuning
    if plus <= 0 or minus <= 0:
        raise ValidationError("resulting idler frequency is non-positive")
    return plus, minus


def narrowband_idler(omega_s: float, omega_p1: float, omega_p2: float):
    """Narrowband idlers omega_i(+/-) = omega_s +/- (omega_p2 - omega_p1)."""
    for name, v in (("omega_s", omega_s), ("omega_p1", omega_p1), ("omega_p2", omega_p2)):
        if v <= 0:
            raise ValidationError(f"{name} must be positive")
    separation = omega_p2 - omega_p1
    plus = omega_s + separation
    minus = omega_s - separation
    if plus <= 0 or minus <= 0:
        raise ValidationError("resulting idler frequency is non-positive")
    return plus, minus


def linear_phase_mismatch(profile: DispersionProfile, omega_p1: float, omega_p2: float,
                          omega_s: float, omega_i: float, branch: str) -> float:
    """Linear mismatch of the four propagation constants, rad/m.

    Branch plus conserves energy as omega_s + omega_p2 = omega_p1 + omega_i
    and gives beta(p1) + beta(i) - beta(p2) - beta(s); branch minus conserves
    omega_s + omega_i = omega_p1 + omega_p2 and gives
    beta(p1) + beta(p2) - beta(s) - beta(i).
    """
    _check_branch(branch)
    b = profile.beta_at(np.array([omega_p1, omega_p2, omega_s, omega_i]))
    b1, b2, bs, bi = (float(v) for v in b)
    if branch == BRANCH_PLUS:
        return b1 + bi - b2 - bs
    return b1 + b2 - bs - bi


def nonlinear_phase_mismatch(gamma1: float, p1: float, gamma2: float, p2: float) -> float:
    """Pump-power induced mismatch gamma1 P1 - gamma2 P2, rad/m."""
    if p1 < 0 or p2 < 0:
        raise ValidationError("pump powers must be >= 0")
    return gamma1 * p1 - gamma2 * p2


@dataclass(frozen=True)
class PhaseMismatch:
    linear: float
    nonlinear: float

    @property
    def total(self) -> float:
        return self.linear + self.nonlinear


@dataclass(frozen=True)
class ConversionResult:
    eta: float
    idler_omega: float
    branch: str
    mismatch: PhaseMismatch
    g: float  # four-wave-mixing gain, rad/m

    @property
    def eta_db(self) -> float:
        return 10.0 * math.log10(self.eta) if self.eta > 0 else -math.inf


def _conversion_point(profile, omega_p1, omega_p2, omega_s, p1, p2,
                      gamma1, gamma2, branch, z) -> ConversionResult:
    """Efficiency formula without setup-level validation (sweeps may pass
    through the degenerate omega_s = omega_p1 point)."""
    plus, minus = idler_frequencies(omega_p1, omega_p2, omega_s)
    omega_i = plus if branch == BRANCH_PLUS else minus
    lin = linear_phase_mismatch(profile, omega_p1, omega_p2, omega_s, omega_i, branch)
    nl = nonlinear_phase_mismatch(gamma1, p1, gamma2, p2)
    mismatch = PhaseMismatch(linear=lin, nonlinear=nl)
    kappa = mismatch.total
    coupling_sq = 4.0 * gamma1 * gamma2 * p1 * p2
    g = math.sqrt(coupling_sq + 0.25 * kappa * kappa)
    if coupling_sq == 0.0:
        eta = 0.0
    else:
        eta = (coupling_sq / g**2) * math.sin(g * z) ** 2
    return ConversionResult(eta=eta, idler_omega=omega_i, branch=branch,
                            mismatch=mismatch, g=g)


def conversion_efficiency(setup: BraggScatteringSetup, branch: str = BRANCH_PLUS,
                          z: float | None = None) -> ConversionResult:
    """Signal-to-idler conversion efficiency at propagation distance z.

    z defaults to the device length; must lie in [0, length].
    """
    _check_branch(branch)
    if z is None:
        z = setup.length
    if not 0.0 <= z <= setup.length:
        raise ValidationError(f"z = {z!r} outside [0, {setup.length}]")
    return _conversion_point(setup.profile, setup.omega_p1, setup.omega_p2,
                             setup.omega_s, setup.p1, setup.p2,
                             setup.gamma1, setup.gamma2, branch, z)


@dataclass(frozen=True)
class PhaseMatchingCurve:
    """Signal sweep at fixed pumps: idler frequency and normalized efficiency."""

    omega_s: np.ndarray
    omega_i: np.ndarray
    kappa: np.ndarray
    eta: np.ndarray       # raw Eq.-type efficiency at z = length
    eta_norm: np.ndarray  # eta / max(eta)
    branch: str


def phase_matching_curve(setup: BraggScatteringSetup, omega_s_values,
                         branch: str = BRANCH_PLUS) -> PhaseMatchingCurve:
    """Sweep the signal frequency, recomputing idler and mismatch per point."""
    _check_branch(branch)
    omega_s_values = np.asarray(omega_s_values, dtype=float)
    if omega_s_values.size == 0:
        raise ValidationError("empty signal sweep range")
    omega_i = np.empty_like(omega_s_values)
    kappa = np.empty_like(omega_s_values)
    eta = np.empty_like(omega_s_values)
    for j, om_s in enumerate(omega_s_values):
        res = _conversion_point(setup.profile, setup.omega_p1, setup.omega_p2,
                                float(om_s), setup.p1, setup.p2,
                                setup.gamma1, setup.gamma2, branch, setup.length)
        omega_i[j] = res.idler_omega
        kappa[j] = res.mismatch.total
        eta[j] = res.eta
    peak = float(eta.max())
    eta_norm = eta / peak if peak > 0 else eta.copy()
    return PhaseMatchingCurve(omega_s=omega_s_values, omega_i=omega_i, kappa=kappa,
                              eta=eta, eta_norm=eta_norm, branch=branch)


@dataclass(frozen=True)
class ModulationInstabilityReport:
    regime: str           # "normal" | "anomalous"
    peak_gain: float      # amplitude growth rate, 1/m
    peak_detuning: float  # rad/s offset of the gain maximum

    NORMAL = "normal"
    ANOMALOUS = "anomalous"


def modulation_instability_check(profile: DispersionProfile, omega_pump: float,
                                 power: float, gamma: float) -> ModulationInstabilityReport:
    """Scalar-NLSE modulation-instability screening at a pump frequency.

    Normal dispersion (beta2 > 0): no MI gain. Anomalous: peak amplitude
    gain gamma P at detuning sqrt(2 gamma P / |beta2|).
    """
    if power < 0:
        raise ValidationError("pump power must be >= 0")
    beta2 = profile.beta2_at(omega_pump)
    if beta2 >= 0.0:
        return ModulationInstabilityReport(ModulationInstabilityReport.NORMAL, 0.0, 0.0)
    if power == 0.0 or gamma <= 0.0:
        return ModulationInstabilityReport(ModulationInstabilityReport.ANOMALOUS, 0.0, 0.0)
    peak_gain = gamma * power
    peak_detuning = math.sqrt(2.0 * gamma * power / abs(beta2))
    return ModulationInstabilityReport(ModulationInstabilityReport.ANOMALOUS,
                                       peak_gain, peak_detuning)
