"""
Features borrowed from audio processing: Mel-frequency cepstral coefficients
and the amplitude modulation spectrogram (AMS).

Both start from the same first-stage STFT (25 ms Hann window, 4 ms hop at the
configured sample rate), so the ``*_from_stft`` variants let a caller share it.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..dsp import Signal, StftGrid, WindowSpec, dct_ii, stft
from ..errors import DataError

LOG_FLOOR = 1e-12


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray      # (n_filters, dft_length // 2 + 1)
    edges_hz: np.ndarray     # n_filters + 2 band edges, snapped to DFT bins
    dft_length: int
    sample_rate_hz: float

    @property
    def n_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def centers_hz(self) -> np.ndarray:
        return self.edges_hz[1:-1]

    @property
    def bandwidths_hz(self) -> np.ndarray:
        return self.edges_hz[2:] - self.edges_hz[:-2]


def mel_filterbank(n_filters: int, dft_length: int, sample_rate_hz: float) -> MelFilterbank:
    """Unit-peak triangular filters equally spaced on the Mel scale over [0, fs/2].

    Band edges are snapped to the nearest DFT bin, so every triangle peaks at
    exactly 1 and neighbouring triangles sum to 1 between their peaks.
    """
    if not 2 <= n_filters <= dft_length // 2:
        raise ValueError(f"n_filters={n_filters} infeasible for dft_length={dft_length}")
    n_bins = dft_length // 2 + 1
    mels = np.linspace(0.0, hz_to_mel(sample_rate_hz / 2), n_filters + 2)
    edge_bins = np.rint(mel_to_hz(mels) * dft_length / sample_rate_hz).astype(int)
    edge_bins = np.clip(edge_bins, 0, n_bins - 1)
    if np.any(np.diff(edge_bins) <= 0):
        raise ValueError(
            f"n_filters={n_filters} too many for dft_length={dft_length}: "
            "adjacent band edges collapse onto one DFT bin")
    nu = np.arange(n_bins)
    w = np.zeros((n_filters, n_bins))
    for i in range(n_filters):
        lo, c, hi = edge_bins[i:i + 3]
        rise = (nu - lo) / (c - lo)
        fall = (hi - nu) / (hi - c)
        w[i] = np.clip(np.minimum(rise, fall), 0.0, None)
    return MelFilterbank(w, edge_bins * sample_rate_hz / dft_length, dft_length,
                         float(sample_rate_hz))


@dataclass(frozen=True)
class StftConfig:
    """Framing of one STFT stage. Lengths are in samples of that stage's input."""

    window_len: int
    hop: int
    dft_length: int
    window: str = "hann"
    truncate: bool = False

    @classmethod
    def first_stage(cls, sample_rate_hz: float, window_s: float = 0.025, hop_s: float = 0.004,
                    dft_length: int | None = None, window: str = "hann",
                    truncate: bool = False) -> "StftConfig":
        """Framing in seconds; dft_length defaults to the next power of two >= window."""
        wl = int(round(window_s * sample_rate_hz))
        hop = int(round(hop_s * sample_rate_hz))
        if dft_length is None:
            dft_length = 1 << (wl - 1).bit_length()
        return cls(wl, hop, dft_length, window, truncate)

    def stft(self, signal: Signal) -> StftGrid:
        return stft(signal, WindowSpec(self.window, self.window_len), self.hop,
                    self.dft_length, truncate=self.truncate)


# Second stage: 128-frame window, 64-frame hop, 256-point DFT.
SECOND_STAGE = StftConfig(128, 64, 256)


def _aggregate(a: np.ndarray, how: str, axis: int) -> np.ndarray:
    if how == "mean":
        return a.mean(axis=axis)
    if how == "median":
        return np.median(a, axis=axis)
    raise ValueError(f"unknown aggregation {how!r}")


def mfcc_frames_from_stft(grid: StftGrid, bank: MelFilterbank) -> np.ndarray:
    """Per-frame cepstra, shape (n_frames, n_filters), coefficient mu = 1..K along axis 1."""
    if grid.dft_length != bank.dft_length:
        raise ValueError("filterbank and STFT use different DFT lengths")
    power = grid.values.real**2 + grid.values.imag**2        # (bins, frames)
    energies = bank.weights @ power                             # (filters, frames)
    return dct_ii(np.log(np.maximum(energies, LOG_FLOOR)).T)


def mfcc_from_stft(grid: StftGrid, bank: MelFilterbank, n_kept: int = 13,
                   aggregate: str = "mean") -> np.ndarray:
    if not 1 <= n_kept <= bank.n_filters:
        raise ValueError(f"n_kept={n_kept} must lie in 1..{bank.n_filters}")
    cep = mfcc_frames_from_stft(grid, bank)[:, :n_kept]
    return _aggregate(cep, aggregate, axis=0)


def mfcc(segment: Signal, bank: MelFilterbank, frame: WindowSpec | None = None,
         hop: int | None = None, n_kept: int = 13, aggregate: str = "mean") -> np.ndarray:
    """Segment-level MFCC vector c[1..n_kept], the frame-wise cepstra aggregated over frames.

    Framing defaults to 25 ms windows with a 4 ms hop.
    """
    fs = segment.sample_rate_hz
    if frame is None:
        frame = WindowSpec("hann", int(round(0.025 * fs)))
    if hop is None:
        hop = int(round(0.004 * fs))
    grid = stft(segment, frame, hop, bank.dft_length, truncate=True)
    return mfcc_from_stft(grid, bank, n_kept, aggregate)


@dataclass(frozen=True)
class AmsMatrix:
    values: np.ndarray         # compressed, (center frequency, modulation frequency)
    magnitude: np.ndarray      # linear, averaged over second-stage frames
    center_freqs_hz: np.ndarray
    mod_freqs_hz: np.ndarray
    compression: str

    def to_csv(self, path) -> None:
        """Rows are subbands; first column is the center frequency, header lists modulation freqs."""
        header = "center_hz," + ",".join(f"{m:.6g}" for m in self.mod_freqs_hz)
        data = np.column_stack([self.center_freqs_hz, self.values])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.10g")


def compress(magnitude: np.ndarray, mode: str) -> np.ndarray:
    """Logarithmic magnitude compression.

    ``log1p`` gives ln(1 + m), which is non-negative; ``db`` gives
    20 log10(max(m, 1e-12)); ``log`` gives ln(max(m, 1e-12)).
    """
    if mode == "log1p":
        return np.log1p(magnitude)
    if mode == "db":
        return 20.0 * np.log10(np.maximum(magnitude, LOG_FLOOR))
    if mode == "log":
        return np.log(np.maximum(magnitude, LOG_FLOOR))
    raise ValueError(f"unknown compression {mode!r}")


@functools.lru_cache(maxsize=8)
def _windowed_dft_basis(window: str, length: int, dft_length: int):
    k = np.arange(length)[:, None]
    mu = np.arange(dft_length // 2 + 1)[None, :]
    w = WindowSpec(window, length).values()[:, None]
    phase = 2 * np.pi * ((k * mu) % dft_length) / dft_length
    return w * np.cos(phase), -w * np.sin(phase)


def ams_from_stft(grid: StftGrid, cfg2: StftConfig = SECOND_STAGE, aggregate: str = "mean",
                  compression: str = "log1p") -> AmsMatrix:
    if grid.n_frames < cfg2.window_len:
        raise DataError(
            f"segment yields {grid.n_frames} first-stage frames, the second STFT needs "
            f"{cfg2.window_len}")
    if cfg2.window_len > cfg2.dft_length:
        raise ValueError("second-stage window longer than its DFT")
    env = grid.values.real**2 + grid.values.imag**2             # (bins, frames)
    segs = np.lib.stride_tricks.sliding_window_view(env, cfg2.window_len, axis=1)[:, ::cfg2.hop]
    # Short zero-padded transforms over thousands of rows: a windowed DFT
    # matrix product is several times faster than batched FFTs here.
    cos_m, sin_m = _windowed_dft_basis(cfg2.window, cfg2.window_len, cfg2.dft_length)
    n_bins, n2 = segs.shape[:2]
    flat = np.ascontiguousarray(segs).reshape(n_bins * n2, cfg2.window_len)
    re = (flat @ cos_m).reshape(n_bins, n2, -1)
    im = (flat @ sin_m).reshape(n_bins, n2, -1)
    mag = _aggregate(np.sqrt(re * re + im * im), aggregate, axis=1)
    mod_freqs = np.fft.rfftfreq(cfg2.dft_length, d=1.0 / grid.frame_rate_hz)
    return AmsMatrix(compress(mag, compression), mag, grid.freqs_hz, mod_freqs, compression)


def ams(segment: Signal, cfg1: StftConfig | None = None, cfg2: StftConfig = SECOND_STAGE,
        aggregate: str = "mean", compression: str = "log1p") -> AmsMatrix:
    """Amplitude modulation spectrogram: an STFT of each subband's squared-magnitude trajectory."""
    if cfg1 is None:
        cfg1 = StftConfig.first_stage(segment.sample_rate_hz)
    grid = cfg1.stft(segment)
    return ams_from_stft(grid, cfg2, aggregate, compression)


def ams_scalar(matrix: AmsMatrix, min_center_hz: float = 20_000.0,
               max_mod_hz: float = 80.0) -> float:
    """Sum of AMS cells with center frequency above ``min_center_hz`` and 0 < modulation < ``max_mod_hz``."""
    rows = matrix.center_freqs_hz > min_center_hz
    cols = (matrix.mod_freqs_hz > 0) & (matrix.mod_freqs_hz < max_mod_hz)
    if not rows.any() or not cols.any():
        raise DataError(
            f"empty AMS selection for center > {min_center_hz} Hz, modulation < {max_mod_hz} Hz")
    return float(matrix.values[np.ix_(rows, cols)].sum())
