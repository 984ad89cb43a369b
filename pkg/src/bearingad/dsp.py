"""
Core DSP primitives: DFT, STFT, windows, analytic envelope and the DCT used
for cepstra.

All transforms are pure functions of their inputs. The DFT is evaluated with
numpy's FFT; its contract is the direct sum

    X[mu] = sum_{k=0}^{K-1} x[k] exp(-j 2 pi k mu / M)

with the segment zero-padded to M points, and the test-suite checks it against
that sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

WINDOW_KINDS = ("hann", "hamming", "rectangular")


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real waveform."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise DataError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(x)):
            raise DataError("signal contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray
    dft_length: int
    bin_spacing_hz: float

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.dft_length) * self.bin_spacing_hz


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "hann"
    length: int = 1280

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}; expected one of {WINDOW_KINDS}")
        if self.length < 1 or (self.kind != "rectangular" and self.length < 2):
            raise ValueError(f"window length {self.length} too short for {self.kind}")

    def values(self) -> np.ndarray:
        if self.kind == "hann":
            return np.hanning(self.length)
        if self.kind == "hamming":
            return np.hamming(self.length)
        return np.ones(self.length)


@dataclass(frozen=True)
class StftGrid:
    """One-sided STFT, ``values[mu, n]`` for bins mu = 0..M/2 and frames n."""

    values: np.ndarray
    window_len: int
    hop: int
    dft_length: int
    sample_rate_hz: float

    @property
    def frame_rate_hz(self) -> float:
        return self.sample_rate_hz / self.hop

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.sample_rate_hz / self.dft_length


def dft(segment, dft_length: int | None = None, sample_rate_hz: float = 1.0) -> Spectrum:
    """M-point DFT of a real segment of length K <= M (zero-padded)."""
    x = np.asarray(segment, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DataError("dft needs a non-empty 1-D segment")
    m = x.size if dft_length is None else int(dft_length)
    if m < 1:
        raise ValueError(f"dft_length must be >= 1, got {m}")
    if x.size > m:
        raise ValueError(f"segment length {x.size} exceeds dft_length {m}")
    return Spectrum(np.fft.fft(x, n=m), m, sample_rate_hz / m)


def frame_count(n_samples: int, window_len: int, hop: int) -> int:
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // hop + 1


def frames(x: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    """Non-copying (n_frames, window_len) view; trailing partial frames are dropped."""
    view = np.lib.stride_tricks.sliding_window_view(x, window_len)
    return view[::hop]


def stft(signal: Signal, window: WindowSpec, hop: int, dft_length: int,
         truncate: bool = False) -> StftGrid:
    """Short-time Fourier transform with frame n covering [n*hop, n*hop + window_len).

    Phase is referenced to the frame start. When the window is longer than
    ``dft_length`` the call fails unless ``truncate`` is set, in which case each
    frame is cut to its first ``dft_length`` samples and a window of that length
    is used instead.
    """
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    if window.length > dft_length:
        if not truncate:
            raise ValueError(
                f"window length {window.length} exceeds dft_length {dft_length}; "
                "pass truncate=True to cut frames")
        window = WindowSpec(window.kind, dft_length)
    x = signal.samples
    if x.size < window.length:
        raise DataError(f"signal of {x.size} samples is shorter than one window ({window.length})")
    fr = frames(x, window.length, hop) * window.values()
    values = np.fft.rfft(fr, n=dft_length, axis=1).T
    return StftGrid(values, window.length, hop, dft_length, signal.sample_rate_hz)


def analytic_envelope(signal: Signal | np.ndarray) -> np.ndarray:
    """|x + jH{x}| via the frequency-domain analytic signal over the whole input."""
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=float)
    n = x.size
    if n < 4:
        raise DataError(f"envelope needs at least 4 samples, got {n}")
    spec = np.fft.fft(x)
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1:n // 2] = 2.0
    else:
        h[1:(n + 1) // 2] = 2.0
    return np.abs(np.fft.ifft(spec * h))


def dct_matrix(k: int) -> np.ndarray:
    """(K, K) matrix D with D[mu-1, i-1] = cos(pi (2i - 1) mu / (2K)), mu, i = 1..K."""
    mu = np.arange(1, k + 1)[:, None]
    i = np.arange(1, k + 1)[None, :]
    return np.cos(np.pi * (2 * i - 1) * mu / (2 * k))


def dct_ii(values) -> np.ndarray:
    """DCT-II with coefficients indexed mu = 1..K, applied along the last axis.

    ``out[..., mu-1] = sum_{i=1}^{K} values[..., i-1] cos(pi (2i-1) mu / (2K))``.
    Note the zeroth (mean) coefficient is not part of the output and the last
    one is identically zero.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0 or v.shape[-1] == 0:
        raise DataError("dct_ii needs a non-empty input")
    return v @ dct_matrix(v.shape[-1]).T


def onesided_magnitude(signal: Signal, window: str = "hann") -> tuple[np.ndarray, np.ndarray]:
    """Magnitude of the windowed full-segment DFT over bins 0..M/2, with bin frequencies."""
    x = signal.samples
    w = WindowSpec(window, x.size).values() if x.size >= 2 else np.ones(1)
    mags = np.abs(np.fft.rfft(x * w))
    freqs = np.fft.rfftfreq(x.size, d=1.0 / signal.sample_rate_hz)
    return mags, freqs
