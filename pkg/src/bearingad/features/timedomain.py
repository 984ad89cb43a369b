"""Time-domain statistics of a vibration segment (feature set ``TD``)."""
from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from ..dsp import Signal
from ..errors import DataError, DegenerateInputError


@dataclass(frozen=True)
class TimeFeatures:
    average: float
    variance: float
    rms: float
    kurtosis: float
    skewness: float
    amplitude_range: float
    peak_to_rms: float

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def extract_time_features(segment: Signal | np.ndarray, abs_peak: bool = False) -> TimeFeatures:
    """Seven moment/amplitude statistics.

    The mean uses 1/K; variance, RMS and the central moments behind kurtosis
    and skewness use 1/(K-1). ``abs_peak`` switches peak-to-RMS from max(x)
    to max(|x|).
    """
    x = segment.samples if isinstance(segment, Signal) else np.asarray(segment, dtype=float)
    k = x.size
    if k < 2:
        raise DataError(f"need at least 2 samples, got {k}")
    mean = x.sum() / k
    d = x - mean
    d2 = d * d
    var = d2.sum() / (k - 1)
    scale = np.max(np.abs(x))
    if scale == 0 or var <= (1e-13 * scale) ** 2:
        raise DegenerateInputError("constant segment: kurtosis and skewness are undefined")
    rms = np.sqrt(np.dot(x, x) / (k - 1))
    kurt = (d2 * d2).sum() / (k - 1) / var**2
    skew = (d2 * d).sum() / (k - 1) / var**1.5
    peak = np.max(np.abs(x)) if abs_peak else np.max(x)
    return TimeFeatures(
        average=float(mean),
        variance=float(var),
        rms=float(rms),
        kurtosis=float(kurt),
        skewness=float(skew),
        amplitude_range=float(np.max(x) - np.min(x)),
        peak_to_rms=float(peak / rms),
    )
