"""
Synthetic bearing vibration for a converter-fed traction motor test rig.

A healthy signal is the sum of

* shaft harmonics at f_r, 2 f_r, 3 f_r,
* broadband machine noise, low-pass shaped with a housing resonance around
  6.5 kHz,
* two fixed converter carriers (3.2 kHz, 6.4 kHz) with weak sidebands at
  +-4 f_r,
* converter switching hash, high-pass noise above about 8 kHz whose level
  follows the motor current (torque).

All healthy components share one machine gain that grows with torque and
speed and varies by +-10 % from run to run.

A localized fault adds an impulse train at the fault's characteristic
frequency (1 % jitter on each impulse position), each impulse ringing an
exponentially decaying resonance at ``resonance_hz``. Everything is drawn
from a seeded generator, so (inputs, seed) fully determine the output.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .dsp import Signal
from .errors import DataError
from .features.envelope import DEFAULT_GEOMETRY, BearingGeometry, fault_frequencies

SAMPLE_RATE_HZ = 51_200.0
SPEED_LEVELS_RPM = (500, 750, 1000, 1500, 2000, 2500, 3000, 3500)
TORQUE_LEVELS = (0, 33, 66, 100)
FAULT_KINDS = ("none", "outer_race", "inner_race", "cage", "rolling_element", "distributed")
NOMINAL_RPM = 2150.0
CONVERTER_CARRIERS_HZ = (3200.0, 6400.0)

NOISE_LEVEL = 0.1
NOISE_FLOOR = 0.003
SHAFT_LEVEL = 0.15
CONVERTER_LEVEL = 0.05
IMPACT_LEVEL = 0.2
BURST_DECAY_S = 6e-4
ROUGHNESS_LEVEL = 0.02
HASH_LEVEL = 0.02
HASH_CORNER_HZ = 8000.0


@dataclass(frozen=True)
class OperatingPoint:
    rotational_speed_rpm: float
    torque_level: int = 0
    duration_s: float = 2.0

    def __post_init__(self):
        if not 500 <= self.rotational_speed_rpm <= 3500:
            raise ValueError(f"speed {self.rotational_speed_rpm} rpm outside [500, 3500]")
        if self.torque_level not in TORQUE_LEVELS:
            raise ValueError(f"torque level must be one of {TORQUE_LEVELS}")
        if not self.duration_s > 0:
            raise ValueError("duration must be positive")

    @property
    def rotational_freq_hz(self) -> float:
        return self.rotational_speed_rpm / 60.0


@dataclass(frozen=True)
class FaultSpec:
    kind: str = "none"
    severity: float = 0.0
    resonance_hz: float = 21_000.0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if not 0 <= self.severity <= 1:
            raise ValueError("severity must lie in [0, 1]")
        if (self.severity == 0) != (self.kind == "none"):
            raise ValueError("severity 0 goes with kind 'none' and only with it")


HEALTHY = FaultSpec()


def _shaped_noise(rng, n, fs, level):
    """White noise through a 2 kHz second-order low-pass plus a 6.5 kHz housing mode and a floor."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    shape = 1.0 / (1.0 + (f / 2000.0) ** 2)
    shape += 0.4 * np.exp(-0.5 * ((f - 6500.0) / 600.0) ** 2)
    shape += NOISE_FLOOR
    return level * np.fft.irfft(spec * shape, n)


def _burst(fs, resonance_hz, decay_s):
    t = np.arange(int(math.ceil(6 * decay_s * fs))) / fs
    return np.exp(-t / decay_s) * np.sin(2 * np.pi * resonance_hz * t)


def _impulse_train(rng, n, fs, rate_hz, jitter=0.01):
    """Unit impulses at a mean rate, each displaced by up to +-jitter of the period."""
    period = 1.0 / rate_hz
    start = rng.uniform(0, period)
    times = np.arange(start, n / fs, period)
    times = times + rng.uniform(-jitter, jitter, times.size) * period
    idx = np.rint(times * fs).astype(int)
    idx = idx[(idx >= 0) & (idx < n)]
    train = np.zeros(n)
    np.add.at(train, idx, 1.0)
    return train, idx


def machine_gain(op: OperatingPoint) -> float:
    """Overall vibration level of the machine; grows with torque and speed."""
    return NOISE_LEVEL * (0.4 + op.torque_level / 100.0) * (0.3 + op.rotational_speed_rpm / NOMINAL_RPM)


def generate(op: OperatingPoint, fault: FaultSpec = HEALTHY,
             geometry: BearingGeometry = DEFAULT_GEOMETRY, seed: int = 0,
             sample_rate_hz: float = SAMPLE_RATE_HZ) -> Signal:
    rng = np.random.default_rng(seed)
    fs = sample_rate_hz
    n = int(round(op.duration_s * fs))
    t = np.arange(n) / fs
    fr = op.rotational_freq_hz
    speed = op.rotational_speed_rpm / NOMINAL_RPM
    torque = op.torque_level / 100.0
    gain = machine_gain(op) * rng.uniform(0.9, 1.1)

    x = _shaped_noise(rng, n, fs, gain)
    for h in (1, 2, 3):
        amp = SHAFT_LEVEL * gain * (0.5 + speed) / h * rng.uniform(0.8, 1.2)
        x += amp * np.cos(2 * np.pi * h * fr * t + rng.uniform(0, 2 * np.pi))

    for fc in CONVERTER_CARRIERS_HZ:
        amp = CONVERTER_LEVEL * gain * (0.6 + 0.4 * torque) * rng.uniform(0.8, 1.2)
        ph = rng.uniform(0, 2 * np.pi, 3)
        x += amp * np.cos(2 * np.pi * fc * t + ph[0])
        for sgn, p in ((-1, ph[1]), (1, ph[2])):
            x += 0.1 * amp * np.cos(2 * np.pi * (fc + sgn * 4 * fr) * t + p)

    # converter switching hash: broadband above ~8 kHz, driven by motor current
    hash_level = HASH_LEVEL * gain * (0.2 + torque) * rng.uniform(0.5, 1.5)
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    hp = (f / HASH_CORNER_HZ) ** 4
    x += hash_level * np.fft.irfft(spec * hp / (1.0 + hp), n)

    if fault.kind != "none":
        x += _fault_signal(rng, n, fs, t, fr, gain, fault, geometry)

    return Signal(x, fs)


def _fault_signal(rng, n, fs, t, fr, gain, fault, geometry):
    ff = fault_frequencies(geometry, fr)
    burst = _burst(fs, fault.resonance_hz, BURST_DECAY_S)
    # impacts grow with load and speed like the rest of the machine
    strength = IMPACT_LEVEL * fault.severity * gain / NOISE_LEVEL

    def ringing(rate_hz, level, modulation=None):
        train, idx = _impulse_train(rng, n, fs, rate_hz)
        train[idx] *= level * rng.uniform(0.7, 1.3, idx.size)
        if modulation is not None:
            train *= modulation
        return fftconvolve(train, burst)[:n]

    kind = fault.kind
    if kind == "outer_race":
        return ringing(ff.bpfo_hz, strength)
    if kind == "inner_race":
        return ringing(ff.bpfi_hz, strength, 1 + 0.8 * np.cos(2 * np.pi * fr * t))
    if kind == "cage":
        return ringing(ff.ca_hz, strength)
    if kind == "rolling_element":
        return ringing(ff.re_hz, strength, 1 + 0.5 * np.cos(2 * np.pi * ff.ca_hz * t))
    # distributed damage: weaker impacts on every component plus high-frequency roughness
    y = ringing(ff.bpfo_hz, 0.5 * strength)
    y += ringing(ff.bpfi_hz, 0.4 * strength, 1 + 0.8 * np.cos(2 * np.pi * fr * t))
    y += ringing(ff.re_hz, 0.3 * strength, 1 + 0.5 * np.cos(2 * np.pi * ff.ca_hz * t))
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    band = np.exp(-0.5 * ((f - fault.resonance_hz) / 2500.0) ** 2)
    y += ROUGHNESS_LEVEL * strength * np.fft.irfft(spec * band, n)
    return y


def speed_profile_signal(levels_rpm, torques, hold_s: float, fault: FaultSpec = HEALTHY,
                         geometry: BearingGeometry = DEFAULT_GEOMETRY, seed: int = 0,
                         sample_rate_hz: float = SAMPLE_RATE_HZ):
    """Concatenate constant-speed stretches into one recording.

    Returns the signal and its step-like speed track as (time_s, rpm) pairs
    (one pair per stretch start plus a final pair at the end).
    """
    parts = []
    track = []
    t0 = 0.0
    for i, (rpm, tq) in enumerate(zip(levels_rpm, torques)):
        sig = generate(OperatingPoint(rpm, tq, hold_s), fault, geometry,
                       seed=_child_seed(seed, i), sample_rate_hz=sample_rate_hz)
        parts.append(sig.samples)
        track.append((t0, float(rpm)))
        t0 += sig.samples.size / sample_rate_hz
    track.append((t0, float(levels_rpm[-1])))
    return Signal(np.concatenate(parts), sample_rate_hz), track


def _child_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def write_wav(path, signal: Signal) -> None:
    """32-bit IEEE float mono WAV (format tag 3), written by hand since the stdlib writer is PCM-only."""
    data = signal.samples.astype("<f4").tobytes()
    fs = int(round(signal.sample_rate_hz))
    fmt = (b"fmt " + (16).to_bytes(4, "little") + (3).to_bytes(2, "little")
           + (1).to_bytes(2, "little") + fs.to_bytes(4, "little")
           + (fs * 4).to_bytes(4, "little") + (4).to_bytes(2, "little")
           + (32).to_bytes(2, "little"))
    body = b"WAVE" + fmt + b"data" + len(data).to_bytes(4, "little") + data
    Path(path).write_bytes(b"RIFF" + len(body).to_bytes(4, "little") + body)


def read_wav(path) -> Signal:
    """Read mono 32-bit float or 16-bit PCM WAV."""
    raw = Path(path).read_bytes()
    if raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise DataError(f"{path} is not a RIFF/WAVE file")
    pos = 12
    fmt = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        size = int.from_bytes(raw[pos + 4:pos + 8], "little")
        chunk = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = (int.from_bytes(chunk[0:2], "little"), int.from_bytes(chunk[2:4], "little"),
                   int.from_bytes(chunk[4:8], "little"), int.from_bytes(chunk[14:16], "little"))
        elif cid == b"data":
            if fmt is None:
                raise DataError("data chunk before fmt chunk")
            tag, channels, fs, bits = fmt
            if channels != 1:
                raise DataError("only mono WAV is supported")
            if tag == 3 and bits == 32:
                x = np.frombuffer(chunk, dtype="<f4").astype(float)
            elif tag == 1 and bits == 16:
                x = np.frombuffer(chunk, dtype="<i2").astype(float) / 32768.0
            else:
                raise DataError(f"unsupported WAV encoding (tag {tag}, {bits} bit)")
            return Signal(x, float(fs))
        pos += 8 + size + (size & 1)
    raise DataError(f"{path} has no data chunk")


def write_signal_csv(path, signal: Signal) -> None:
    """One sample per row; the header row carries the sample rate."""
    with open(path, "w", newline="") as fh:
        fh.write(f"sample_rate_hz={signal.sample_rate_hz!r}\n")
        np.savetxt(fh, signal.samples, fmt="%.17g")


def read_signal_csv(path) -> Signal:
    with open(path) as fh:
        head = fh.readline().strip()
        key, _, val = head.partition("=")
        if key.strip() != "sample_rate_hz":
            raise DataError(f"{path}: first row must be 'sample_rate_hz=<value>'")
        try:
            x = np.loadtxt(fh, ndmin=1)
            fs = float(val)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
    return Signal(x, fs)


def write_speed_track(path, track) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "rpm"])
        for ts, rpm in track:
            w.writerow([repr(float(ts)), repr(float(rpm))])


def read_speed_track(path) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [(float(r["time_s"]), float(r["rpm"])) for r in rows]
    except (KeyError, TypeError, ValueError):
        raise DataError(f"{path}: speed track needs numeric time_s and rpm columns") from None
