"""Bearing anomaly detection from vibration signals.

Feature extraction (time-domain, spectral, envelope, MFCC, AMS), a
One-Class SVM trained on healthy data only, evaluation metrics, a synthetic
signal generator and the experiment pipeline behind the ``bearingad`` CLI.
"""
from .dsp import Signal, Spectrum, StftGrid, WindowSpec, analytic_envelope, dct_ii, dft, stft
from .errors import BearingAdError, ConvergenceError, DataError, DegenerateInputError
from .metrics import ConfusionMatrix, EvalReport, confusion, report
from .ocsvm import OcSvmHyperParams, OcSvmModel, grid_search, train

__version__ = "0.1.0"

__all__ = [
    "BearingAdError", "ConfusionMatrix", "ConvergenceError", "DataError", "DegenerateInputError",
    "EvalReport", "OcSvmHyperParams", "OcSvmModel", "Signal", "Spectrum", "StftGrid",
    "WindowSpec", "analytic_envelope", "confusion", "dct_ii", "dft", "grid_search", "report",
    "stft", "train",
]
