"""Spectral shape descriptors of a magnitude spectrum (feature set ``SD``)."""
from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from ..errors import DataError, DegenerateInputError


@dataclass(frozen=True)
class SpectralFeatures:
    centroid_hz: float
    spread_hz: float
    kurtosis: float
    entropy: float
    crest: float
    rolloff_hz: float

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def extract_spectral_features(magnitudes, bin_freqs_hz, kappa: float = 0.95,
                              normalize_entropy: bool = True) -> SpectralFeatures:
    """Descriptors over all bins mu = 0..K-1 of ``magnitudes``.

    Entropy is ``-sum p log p / log(K - 1)``; with ``normalize_entropy`` the
    magnitudes are first scaled to sum to one (``p = |X| / sum |X|``), otherwise
    the raw magnitudes are used. Roll-off is the frequency of the first bin whose
    cumulative magnitude reaches ``kappa`` times the total. Kurtosis is NaN for a
    spectrum with zero spread.
    """
    mag = np.asarray(magnitudes, dtype=float)
    f = np.asarray(bin_freqs_hz, dtype=float)
    if mag.ndim != 1 or mag.shape != f.shape:
        raise DataError("magnitudes and bin frequencies must be 1-D and equally long")
    if mag.size < 3:
        raise DataError("need at least 3 bins")
    if np.any(mag < 0) or not np.all(np.isfinite(mag)):
        raise DataError("magnitudes must be finite and non-negative")
    if np.any(np.diff(f) <= 0):
        raise DataError("bin frequencies must be strictly increasing")
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    total = mag.sum()
    if total <= 0:
        raise DegenerateInputError("all-zero spectrum")

    centroid = np.dot(f, mag) / total
    dev = f - centroid
    spread = np.sqrt(np.dot(dev * dev, mag) / total)
    if spread > 0:
        kurt = np.dot(dev**4, mag) / (spread**4 * total)
    else:
        kurt = np.nan

    p = mag / total if normalize_entropy else mag
    nz = p > 0
    entropy = -np.dot(p[nz], np.log(p[nz])) / np.log(mag.size - 1)

    crest = mag.max() / (total / mag.size)
    cum = np.cumsum(mag)
    idx = int(np.searchsorted(cum, kappa * total, side="left"))
    idx = min(idx, mag.size - 1)
    return SpectralFeatures(
        centroid_hz=float(centroid),
        spread_hz=float(spread),
        kurtosis=float(kurt),
        entropy=float(entropy),
        crest=float(crest),
        rolloff_hz=float(f[idx]),
    )
