"""Quantum Fisher information toolkit for Gaussian state families in the complex phase-space form."""

from .family import DerivativeBundle, InitialState, StateFamily, catalog_family, constant_family, evaluate_bundle
from .gaussian_catalog import ChannelStep, GaussianChannel, GaussianGenerator, apply, channel_from_generator
from .phase_space import GaussianState, RealFormState, StateError, to_complex_form, to_real_form, validate
from .qfim import PureModeError, QfimResult
from .sld import SaturabilityReport, SldCoefficients
from .williamson import WilliamsonDecomposition, williamson_decompose

__version__ = "0.1.0"

__all__ = [
    "ChannelStep",
    "DerivativeBundle",
    "GaussianChannel",
    "GaussianGenerator",
    "GaussianState",
    "InitialState",
    "PureModeError",
    "QfimResult",
    "RealFormState",
    "SaturabilityReport",
    "SldCoefficients",
    "StateError",
    "StateFamily",
    "WilliamsonDecomposition",
    "apply",
    "catalog_family",
    "channel_from_generator",
    "constant_family",
    "evaluate_bundle",
    "to_complex_form",
    "to_real_form",
    "validate",
    "williamson_decompose",
]
