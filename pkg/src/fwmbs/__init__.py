"""Frequency conversion by four-wave-mixing Bragg scattering in Si3N4 waveguides.

Library + CLI covering waveguide dispersion engineering, analytic
coupled-mode conversion efficiency, full split-step Fourier propagation,
and inverse design of emitter-to-telecom converters.
"""

__version__ = "0.1.0"
