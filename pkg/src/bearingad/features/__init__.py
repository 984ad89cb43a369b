"""Feature extractors for the five feature sets."""
from .audio import (AmsMatrix, MelFilterbank, StftConfig, ams, ams_from_stft, ams_scalar,
                    mel_filterbank, mfcc, mfcc_from_stft)
from .envelope import (DEFAULT_GEOMETRY, BearingGeometry, EnvAmpFeatures, FaultFrequencies,
                       envelope_fault_amplitudes, fault_frequencies)
from .spectral import SpectralFeatures, extract_spectral_features
from .timedomain import TimeFeatures, extract_time_features

__all__ = [
    "AmsMatrix", "MelFilterbank", "StftConfig", "ams", "ams_from_stft", "ams_scalar",
    "mel_filterbank", "mfcc", "mfcc_from_stft", "DEFAULT_GEOMETRY", "BearingGeometry",
    "EnvAmpFeatures", "FaultFrequencies", "envelope_fault_amplitudes", "fault_frequencies",
    "SpectralFeatures", "extract_spectral_features", "TimeFeatures", "extract_time_features",
]
