"""
Bearing kinematics and envelope-spectrum amplitudes at the characteristic
fault frequencies (feature set ``ENV_AMP``).

Fault frequencies for shaft frequency f_r, n rolling elements, ball diameter d,
pitch diameter D and contact angle phi:

    BPFO = n/2 * f_r * (1 - d/D cos phi)
    BPFI = n/2 * f_r * (1 + d/D cos phi)
    CA   = f_r/2 * (1 - d/D cos phi)             (cage / FTF)
    RE   = D/(2d) * f_r * (1 - (d/D cos phi)^2)  (ball spin / BSF)
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from ..dsp import Signal, analytic_envelope
from ..errors import DataError

FAULT_KINDS = ("bpfo", "bpfi", "ca", "re")


@dataclass(frozen=True)
class BearingGeometry:
    n_rolling_elements: int
    ball_diameter_mm: float
    pitch_diameter_mm: float
    contact_angle_rad: float = 0.0

    def __post_init__(self):
        if self.n_rolling_elements < 2:
            raise ValueError("a bearing needs at least 2 rolling elements")
        if not 0 < self.ball_diameter_mm < self.pitch_diameter_mm:
            raise ValueError("ball diameter must be positive and smaller than the pitch diameter")
        if not 0 <= self.contact_angle_rad < math.pi / 2:
            raise ValueError("contact angle must lie in [0, pi/2)")

    @property
    def ratio(self) -> float:
        return self.ball_diameter_mm / self.pitch_diameter_mm * math.cos(self.contact_angle_rad)


# 6205-type deep groove ball bearing. Unlike an n=8, d/D=0.2 bearing its
# fault-frequency harmonics do not coincide (3*BPFO == 2*BPFI there).
DEFAULT_GEOMETRY = BearingGeometry(9, 7.94, 39.04, 0.0)


@dataclass(frozen=True)
class FaultFrequencies:
    bpfo_hz: float
    bpfi_hz: float
    ca_hz: float
    re_hz: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    def __getitem__(self, kind: str) -> float:
        return getattr(self, f"{kind}_hz")


@dataclass(frozen=True)
class EnvAmpFeatures:
    amp_bpfo: float
    amp_bpfi: float
    amp_ca: float
    amp_re: float

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def fault_frequencies(geometry: BearingGeometry, rotational_freq_hz: float) -> FaultFrequencies:
    if not rotational_freq_hz > 0:
        raise ValueError(f"rotational frequency must be positive, got {rotational_freq_hz}")
    r = geometry.ratio
    n = geometry.n_rolling_elements
    fr = rotational_freq_hz
    return FaultFrequencies(
        bpfo_hz=n / 2 * fr * (1 - r),
        bpfi_hz=n / 2 * fr * (1 + r),
        ca_hz=fr / 2 * (1 - r),
        re_hz=geometry.pitch_diameter_mm / (2 * geometry.ball_diameter_mm) * fr * (1 - r * r),
    )


def nearest_bin(freq_hz: float, bin_spacing_hz: float) -> int:
    """Index of the bin closest to ``freq_hz``; exact half-way ties go to the lower bin."""
    return int(math.ceil(freq_hz / bin_spacing_hz - 0.5))


def envelope_spectrum(segment: Signal) -> np.ndarray:
    """|DFT| of the mean-removed analytic envelope, one-sided (bins 0..M/2)."""
    env = analytic_envelope(segment)
    env = env - env.mean()
    return np.abs(np.fft.rfft(env))


def envelope_fault_amplitudes(segment: Signal, faults: FaultFrequencies,
                              n_harmonics: int = 3, search_bins: int = 0,
                              env_spectrum: np.ndarray | None = None) -> EnvAmpFeatures:
    """Sum of envelope-spectrum magnitudes at harmonics 1..n_harmonics of each fault frequency.

    ``search_bins > 0`` takes the maximum within +-search_bins of the nearest
    bin instead of the nearest bin itself (slip compensation).
    """
    spec = envelope_spectrum(segment) if env_spectrum is None else env_spectrum
    spacing = segment.sample_rate_hz / len(segment)
    top = spec.size - 1
    amps = []
    for kind in FAULT_KINDS:
        f0 = faults[kind]
        total = 0.0
        for i in range(1, n_harmonics + 1):
            b = nearest_bin(i * f0, spacing)
            if b + search_bins > top:
                raise DataError(
                    f"{kind} harmonic {i} at {i * f0:.1f} Hz is beyond the envelope "
                    f"spectrum (max {top * spacing:.1f} Hz)")
            if search_bins:
                total += spec[max(b - search_bins, 0):b + search_bins + 1].max()
            else:
                total += spec[b]
        amps.append(total)
    return EnvAmpFeatures(*map(float, amps))
