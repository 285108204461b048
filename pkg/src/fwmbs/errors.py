"""Exception taxonomy shared by all modules.

Two broad classes matter to callers (and fix the CLI exit codes):
``ValidationError`` for bad inputs, files, or units, and ``PhysicsError``
for situations where the inputs are well-formed but the physics or
numerics cannot deliver (mode cutoff, spectral overflow, unreachable
design targets).
"""


class FwmbsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FwmbsError, ValueError):
    """Invalid argument, config entry, or data file (CLI exit code 1)."""


class PhysicsError(FwmbsError):
    """Well-formed input with no physical/numerical solution (CLI exit code 2)."""


class CutoffError(PhysicsError):
    """No guided mode exists for the requested structure/wavelength."""


class MaterialEvalError(PhysicsError):
    """Refractive-index evaluation outside validity or near a Sellmeier pole."""


class SpectralOverflowError(PhysicsError):
    """Propagating field developed significant power outside the dispersion table."""


class StepSizeError(PhysicsError):
    """Split-step nonlinear phase bound violated; a smaller step is required."""


class UnreachableTargetError(PhysicsError):
    """Inverse design target outside the reachable parameter range."""
