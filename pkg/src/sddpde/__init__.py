"""Spectral-Galerkin simulation of parabolic equations with state-dependent delay."""
from .spectral import Spectrum, l2_norm, mode
from .history import HermiteCurve, HistorySegment, extend_ET, norms, segment_at
from .delay import ConstantDelay, DelayConfigurationError, ThresholdDelay, solve_delay
from .nonlinearity import ConvolutionB, Kernel, ScalarFunction, apply_DF, apply_F
from .model import ModelSpec, make_model

__all__ = [
    "Spectrum", "l2_norm", "mode", "HermiteCurve", "HistorySegment", "extend_ET", "norms",
    "segment_at", "ConstantDelay", "DelayConfigurationError", "ThresholdDelay", "solve_delay",
    "ConvolutionB", "Kernel", "ScalarFunction", "apply_DF", "apply_F", "ModelSpec", "make_model",
]
__version__ = "0.1.0"
