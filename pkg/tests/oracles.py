"""Literal reference implementations used as test oracles.

These deliberately avoid the package's code paths: sums are written out as
defined, windows and filters are rebuilt from their formulas, and the Hilbert
transform comes from scipy.
"""
import math

import numpy as np
from scipy.signal import hilbert


def direct_dft(x, m=None):
    """O(N*M) direct sum X[mu] = sum_k x[k] exp(-j 2 pi k mu / M)."""
    x = np.asarray(x, dtype=float)
    m = x.size if m is None else m
    k = np.arange(x.size)
    out = np.empty(m, dtype=complex)
    for mu in range(m):
        ph = 2 * np.pi * ((k * mu) % m) / m
        out[mu] = np.sum(x * np.cos(ph)) - 1j * np.sum(x * np.sin(ph))
    return out


def direct_dft_rows(rows, m):
    """Direct-sum one-sided DFT of each row (bins 0..m/2), as one matrix product."""
    rows = np.asarray(rows, dtype=float)
    k = np.arange(rows.shape[1])[:, None]
    mu = np.arange(m // 2 + 1)[None, :]
    ph = 2 * np.pi * ((k * mu) % m) / m
    return rows @ np.cos(ph) - 1j * (rows @ np.sin(ph))


def hann(n):
    k = np.arange(n)
    return 0.5 - 0.5 * np.cos(2 * np.pi * k / (n - 1))


def time_features(x):
    x = [float(v) for v in x]
    k = len(x)
    avg = math.fsum(x) / k
    var = math.fsum((v - avg) ** 2 for v in x) / (k - 1)
    rms = math.sqrt(math.fsum(v * v for v in x) / (k - 1))
    kurt = math.fsum((v - avg) ** 4 for v in x) / (k - 1) / var**2
    skew = math.fsum((v - avg) ** 3 for v in x) / (k - 1) / var**1.5
    return [avg, var, rms, kurt, skew, max(x) - min(x), max(x) / rms]


def spectral_features(mag, f, kappa=0.95):
    mag = [float(v) for v in mag]
    f = [float(v) for v in f]
    k = len(mag)
    total = math.fsum(mag)
    sc = math.fsum(fi * m for fi, m in zip(f, mag)) / total
    sspr = math.sqrt(math.fsum((fi - sc) ** 2 * m for fi, m in zip(f, mag)) / total)
    skurt = math.fsum((fi - sc) ** 4 * m for fi, m in zip(f, mag)) / (sspr**4 * total)
    p = [m / total for m in mag]
    ent = -math.fsum(q * math.log(q) for q in p if q > 0) / math.log(k - 1)
    crest = max(mag) / (total / k)
    run = 0.0
    roll = f[-1]
    for fi, m in zip(f, mag):
        run += m
        if run >= kappa * total:
            roll = fi
            break
    return [sc, sspr, skurt, ent, crest, roll]


def segment_spectrum(x, fs):
    """Hann-windowed one-sided magnitude spectrum of a whole segment."""
    x = np.asarray(x, dtype=float)
    mags = np.abs(np.fft.rfft(x * hann(x.size)))
    return mags, np.arange(mags.size) * fs / x.size


def fault_frequencies(n, d, big_d, fr, phi=0.0):
    r = d / big_d * math.cos(phi)
    return {"bpfo": n / 2 * fr * (1 - r), "bpfi": n / 2 * fr * (1 + r),
            "ca": fr / 2 * (1 - r), "re": big_d / (2 * d) * fr * (1 - r * r)}


def env_amplitudes(x, fs, faults, n_harmonics=3):
    """Envelope via scipy's Hilbert transform; each needed line is a direct sum."""
    env = np.abs(hilbert(np.asarray(x, dtype=float)))
    env = env - env.mean()
    k = np.arange(env.size)
    spacing = fs / env.size

    def line(b):
        ph = 2 * np.pi * ((k * b) % env.size) / env.size
        return abs(complex(np.sum(env * np.cos(ph)), -np.sum(env * np.sin(ph))))

    out = []
    for kind in ("bpfo", "bpfi", "ca", "re"):
        total = 0.0
        for i in range(1, n_harmonics + 1):
            pos = i * faults[kind] / spacing
            lo = math.floor(pos)
            b = lo if pos - lo <= 0.5 else lo + 1     # ties go to the lower bin
            total += line(b)
        out.append(total)
    return out


def mel_triangles(n_filters, nfft, fs):
    """Unit-peak triangles between mel-spaced edges snapped to DFT bins."""
    top = 2595 * math.log10(1 + fs / 2 / 700)
    edges = []
    for i in range(n_filters + 2):
        mel = top * i / (n_filters + 1)
        hz = 700 * (10 ** (mel / 2595) - 1)
        edges.append(int(round(hz * nfft / fs)))
    w = np.zeros((n_filters, nfft // 2 + 1))
    for i in range(n_filters):
        lo, c, hi = edges[i], edges[i + 1], edges[i + 2]
        for nu in range(lo, hi + 1):
            w[i, nu] = (nu - lo) / (c - lo) if nu <= c else (hi - nu) / (hi - c)
    return w


def mfcc(x, fs, n_filters=26, n_kept=13, win_s=0.025, hop_s=0.004):
    """Frame, window, direct-sum DFT, triangle sums, log, direct DCT, mean over frames."""
    x = np.asarray(x, dtype=float)
    wl, hop = int(round(win_s * fs)), int(round(hop_s * fs))
    nfft = 1 << (wl - 1).bit_length()
    n_frames = (x.size - wl) // hop + 1
    w = hann(wl)
    rows = np.array([x[n * hop:n * hop + wl] * w for n in range(n_frames)])
    power = np.abs(direct_dft_rows(rows, nfft)) ** 2
    energies = power @ mel_triangles(n_filters, nfft, fs).T
    logs = np.log(np.maximum(energies, 1e-12))
    k = n_filters
    cep = np.zeros((n_frames, n_kept))
    for mu in range(1, n_kept + 1):
        basis = np.array([math.cos(math.pi * (2 * i - 1) * mu / (2 * k)) for i in range(1, k + 1)])
        cep[:, mu - 1] = logs @ basis
    return cep.mean(axis=0)


def ocsvm_dual_projected_gradient(k, nu, tol=1e-12, max_iter=200_000):
    """Projected gradient on min 1/2 a'Ka s.t. 0 <= a <= 1/(nu N), sum a = 1."""
    n = k.shape[0]
    c = 1.0 / (nu * n)
    a = np.full(n, 1.0 / n)
    step = 1.0 / max(np.linalg.eigvalsh(k)[-1], 1e-12)
    for _ in range(max_iter):
        nxt = _project_capped_simplex(a - step * (k @ a), c)
        if np.max(np.abs(nxt - a)) < tol:
            return nxt
        a = nxt
    return a


def _project_capped_simplex(v, c):
    """Euclidean projection onto {0 <= a <= c, sum a = 1} by bisection on the shift."""
    lo, hi = np.min(v) - c - 1.0, np.max(v) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, c).sum() > 1.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi), 0.0, c)
