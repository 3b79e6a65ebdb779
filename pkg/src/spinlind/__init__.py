"""Semiclassical Lindblad-like dynamics and stick spectra for CW magnetic resonance."""

from .errors import (
    AccuracyError,
    DomainViolationError,
    PoleError,
    SpinLindError,
    ValidationError,
    WitnessInapplicableError,
)
from .lineshape import FrequencyDistribution, delta_line, gaussian, lorentzian
from .mastereq import FieldConfig, MasterEquationModel, build_model, propagate
from .qubit import QubitParams
from .spectrum import EquivalentGroup, StickSpectrum, generating_polynomial, stick_spectrum
from .spincore import SpinSystem, beta_from_kelvin, compress, decompress

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "DomainViolationError",
    "PoleError",
    "SpinLindError",
    "ValidationError",
    "WitnessInapplicableError",
    "FrequencyDistribution",
    "delta_line",
    "gaussian",
    "lorentzian",
    "FieldConfig",
    "MasterEquationModel",
    "build_model",
    "propagate",
    "QubitParams",
    "EquivalentGroup",
    "StickSpectrum",
    "generating_polynomial",
    "stick_spectrum",
    "SpinSystem",
    "beta_from_kelvin",
    "compress",
    "decompress",
    "__version__",
]
