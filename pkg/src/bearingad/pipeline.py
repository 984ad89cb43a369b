"""
End-to-end orchestration: segmentation, feature extraction, and the repeated
train / grid-search / test protocol with a One-Class SVM trained on healthy
segments only.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import ocsvm
from .dsp import Signal, onesided_magnitude
from .errors import DataError
from .features.audio import (SECOND_STAGE, StftConfig, ams_from_stft, ams_scalar,
                             mel_filterbank, mfcc_frames_from_stft)
from .features.envelope import (DEFAULT_GEOMETRY, BearingGeometry, EnvAmpFeatures,
                                envelope_fault_amplitudes, fault_frequencies)
from .features.spectral import SpectralFeatures, extract_spectral_features
from .features.timedomain import TimeFeatures, extract_time_features
from .metrics import NEGATIVE, POSITIVE, EvalReport, confusion, mean_report, report

FEATURE_SETS = ("TD", "SD", "ENV_AMP", "AMS", "MFCC")
FR_COLUMN = "f_r_hz"


@dataclass(frozen=True)
class FeatureConfig:
    n_mfcc: int = 13
    n_filters: int = 26
    frame_s: float = 0.025
    hop_s: float = 0.004
    first_dft_length: int | None = None      # None: next power of two >= frame
    strict_truncate: bool = False
    second_window: int = SECOND_STAGE.window_len
    second_hop: int = SECOND_STAGE.hop
    second_dft_length: int = SECOND_STAGE.dft_length
    window: str = "hann"
    aggregate: str = "mean"
    ams_compression: str = "log1p"
    ams_min_center_hz: float = 20_000.0
    ams_max_mod_hz: float = 80.0
    kappa: float = 0.95
    normalize_entropy: bool = True
    abs_peak: bool = False
    envelope_search_bins: int = 0
    geometry: BearingGeometry = DEFAULT_GEOMETRY

    def first_stage(self, sample_rate_hz: float) -> StftConfig:
        if self.strict_truncate:
            return StftConfig.first_stage(sample_rate_hz, self.frame_s, self.hop_s,
                                          self.first_dft_length or 512, self.window, True)
        return StftConfig.first_stage(sample_rate_hz, self.frame_s, self.hop_s,
                                      self.first_dft_length, self.window)

    @property
    def second_stage(self) -> StftConfig:
        return StftConfig(self.second_window, self.second_hop, self.second_dft_length, self.window)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geometry"] = asdict(self.geometry)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        d = dict(d)
        if "geometry" in d:
            d["geometry"] = BearingGeometry(**d["geometry"])
        return cls(**d)


def feature_names(set_id: str, cfg: FeatureConfig = FeatureConfig(), n_mfcc: int | None = None,
                  with_fr: bool = False) -> list[str]:
    if set_id == "TD":
        names = ["td_" + n for n in TimeFeatures.names()]
    elif set_id == "SD":
        names = ["sd_" + n for n in SpectralFeatures.names()]
    elif set_id == "ENV_AMP":
        names = ["env_" + n for n in EnvAmpFeatures.names()]
    elif set_id == "AMS":
        names = ["ams_scalar"]
    elif set_id == "MFCC":
        names = [f"mfcc_{i}" for i in range(1, (n_mfcc or cfg.n_mfcc) + 1)]
    else:
        raise ValueError(f"unknown feature set {set_id!r}; expected one of {FEATURE_SETS}")
    return names + [FR_COLUMN] if with_fr else names


@dataclass
class ExperimentConfig:
    feature_sets: tuple = FEATURE_SETS
    with_fr: bool = False
    repetitions: int = 10
    train_size: int = 500
    eval_size: int = 50
    seed: int = 0
    nu_grid: tuple = ocsvm.DEFAULT_NU_GRID
    gamma_grid: tuple = ocsvm.DEFAULT_GAMMA_GRID
    solver_tol: float = 1e-6
    solver_max_iter: int = 10_000_000
    segment_s: float = 2.0
    max_rpm_spread: float = 0.01
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        self.feature_sets = tuple(self.feature_sets)
        self.nu_grid = tuple(self.nu_grid)
        self.gamma_grid = tuple(self.gamma_grid)
        for s in self.feature_sets:
            feature_names(s)
        if self.repetitions < 1 or self.train_size < 2 or self.eval_size < 1:
            raise ValueError("repetitions >= 1, train_size >= 2 and eval_size >= 1 required")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["features"] = self.features.to_dict()
        for k in ("feature_sets", "nu_grid", "gamma_grid"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "features" in d:
            d["features"] = FeatureConfig.from_dict(d["features"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SegmentRecord:
    segment: Signal
    rotational_freq_hz: float
    label: str
    source_id: str


@dataclass
class Segmentation:
    records: list
    kept_spans: list       # (start_sample, stop_sample)
    dismissed_spans: list


def segment(signal: Signal, speed_track, label: str = POSITIVE, source_id: str = "sig",
            frame_s: float = 2.0, max_rpm_spread: float = 0.01) -> Segmentation:
    """Cut into non-overlapping ``frame_s`` frames, dismissing frames with a speed transition.

    The speed track is a list of (time_s, rpm) points read as sample-and-hold:
    the speed at t is the rpm of the last point at or before t. A frame is
    dismissed when its rpm range exceeds ``max_rpm_spread`` times its mean rpm.
    """
    if label not in (POSITIVE, NEGATIVE):
        raise DataError(f"label must be 'P' or 'N', got {label!r}")
    fs = signal.sample_rate_hz
    flen = int(round(frame_s * fs))
    n = len(signal)
    if n < flen:
        raise DataError(f"signal of {signal.duration_s:.3f} s is shorter than one {frame_s} s frame")
    track = np.asarray(speed_track, dtype=float).reshape(-1, 2)
    order = np.argsort(track[:, 0], kind="stable")
    times, rpms = track[order, 0], track[order, 1]
    if times.size == 0 or times[0] > 0 or times[-1] < (n - 1) / fs:
        raise DataError("speed track must cover the whole signal")
    if np.any(rpms <= 0):
        raise DataError("speed track contains non-positive speeds")
    n_frames = n // flen
    sample_t = np.arange(n_frames * flen) / fs
    rpm_at = rpms[np.searchsorted(times, sample_t, side="right") - 1].reshape(n_frames, flen)
    records, kept, dismissed = [], [], []
    for i in range(n_frames):
        r = rpm_at[i]
        mean_rpm = r.mean()
        span = (i * flen, (i + 1) * flen)
        if r.max() - r.min() > max_rpm_spread * mean_rpm:
            dismissed.append(span)
            continue
        kept.append(span)
        seg = Signal(signal.samples[span[0]:span[1]], fs)
        records.append(SegmentRecord(seg, mean_rpm / 60.0, label, f"{source_id}#{i}"))
    return Segmentation(records, kept, dismissed)


class Extractor:
    """Computes every feature set of a segment, sharing the first-stage STFT.

    Asking for more MFCCs than ``cfg.n_filters`` grows the mel bank to one
    filter per coefficient (the 1..40 sweep needs a 40-filter bank).
    """

    def __init__(self, cfg: FeatureConfig = FeatureConfig(), n_mfcc: int | None = None):
        self.cfg = cfg
        self.n_mfcc = n_mfcc or cfg.n_mfcc
        if self.n_mfcc < 1:
            raise ValueError("n_mfcc must be >= 1")
        self.n_filters = max(cfg.n_filters, self.n_mfcc)
        self._banks = {}

    def _bank(self, stage: StftConfig, fs: float):
        key = (stage.dft_length, fs)
        if key not in self._banks:
            self._banks[key] = mel_filterbank(self.n_filters, stage.dft_length, fs)
        return self._banks[key]

    def extract(self, rec: SegmentRecord, sets: Iterable[str] = FEATURE_SETS) -> dict:
        cfg = self.cfg
        sets = tuple(sets)
        sig = rec.segment
        out = {}
        if "TD" in sets:
            out["TD"] = extract_time_features(sig, abs_peak=cfg.abs_peak).as_array()
        if "SD" in sets:
            mags, freqs = onesided_magnitude(sig, cfg.window)
            out["SD"] = extract_spectral_features(mags, freqs, cfg.kappa,
                                                  cfg.normalize_entropy).as_array()
        if "ENV_AMP" in sets:
            ff = fault_frequencies(cfg.geometry, rec.rotational_freq_hz)
            out["ENV_AMP"] = envelope_fault_amplitudes(
                sig, ff, search_bins=cfg.envelope_search_bins).as_array()
        if "AMS" in sets or "MFCC" in sets:
            stage = cfg.first_stage(sig.sample_rate_hz)
            grid = stage.stft(sig)
            if "MFCC" in sets:
                cep = mfcc_frames_from_stft(grid, self._bank(stage, sig.sample_rate_hz))
                cep = cep[:, :self.n_mfcc]
                out["MFCC"] = cep.mean(axis=0) if cfg.aggregate == "mean" else np.median(cep, axis=0)
            if "AMS" in sets:
                m = ams_from_stft(grid, cfg.second_stage, cfg.aggregate, cfg.ams_compression)
                out["AMS"] = np.array([ams_scalar(m, cfg.ams_min_center_hz, cfg.ams_max_mod_hz)])
        for k, v in out.items():
            if not np.all(np.isfinite(v)):
                raise DataError(f"{rec.source_id}: non-finite {k} features")
        return out


@dataclass(frozen=True)
class FeatureVector:
    feature_set_id: str
    values: np.ndarray
    with_fr: bool
    label: str
    source_id: str


def extract(records: Iterable[SegmentRecord], set_id: str, with_fr: bool = False,
            cfg: FeatureConfig = FeatureConfig()) -> list[FeatureVector]:
    ex = Extractor(cfg)
    out = []
    for rec in records:
        v = ex.extract(rec, (set_id,))[set_id]
        if with_fr:
            v = np.append(v, rec.rotational_freq_hz)
        out.append(FeatureVector(set_id, v, with_fr, rec.label, rec.source_id))
    return out


@dataclass
class FeatureTable:
    """Per-segment features of one set; f_r is kept as its own column and appended on demand."""

    set_id: str
    names: list
    values: np.ndarray
    labels: np.ndarray
    fr_hz: np.ndarray
    source_ids: list

    def __len__(self):
        return self.values.shape[0]

    def matrix(self, with_fr: bool = False, n_cols: int | None = None) -> np.ndarray:
        v = self.values if n_cols is None else self.values[:, :n_cols]
        return np.column_stack([v, self.fr_hz]) if with_fr else v

    def columns(self, names) -> np.ndarray:
        cols = []
        for n in names:
            if n == FR_COLUMN:
                cols.append(self.fr_hz)
            elif n in self.names:
                cols.append(self.values[:, self.names.index(n)])
            else:
                raise DataError(f"feature column {n!r} not in table ({self.names})")
        return np.column_stack(cols)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source_id", "label", FR_COLUMN, *self.names])
            for sid, lab, fr, row in zip(self.source_ids, self.labels, self.fr_hz, self.values):
                w.writerow([sid, lab, repr(float(fr)), *(repr(float(x)) for x in row)])

    @classmethod
    def from_csv(cls, path, set_id: str = "") -> "FeatureTable":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:3] != ["source_id", "label", FR_COLUMN]:
            raise DataError(f"{path}: expected header source_id,label,{FR_COLUMN},...")
        names = rows[0][3:]
        body = rows[1:]
        try:
            vals = np.array([[float(x) for x in r[3:]] for r in body]).reshape(len(body), len(names))
            fr = np.array([float(r[2]) for r in body])
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        return cls(set_id or _guess_set(names), names, vals, np.array([r[1] for r in body]),
                   fr, [r[0] for r in body])

    @classmethod
    def from_vectors(cls, vectors: list, names: list, fr_hz) -> "FeatureTable":
        return cls(vectors[0].feature_set_id if vectors else "", list(names),
                   np.array([v.values for v in vectors]).reshape(len(vectors), len(names)),
                   np.array([v.label for v in vectors]), np.asarray(fr_hz, dtype=float),
                   [v.source_id for v in vectors])


def _guess_set(names) -> str:
    for s in FEATURE_SETS:
        if names and names[0] == feature_names(s, n_mfcc=1)[0]:
            return s
    return ""


def build_tables(records: Iterable[SegmentRecord], cfg: FeatureConfig = FeatureConfig(),
                 sets: Iterable[str] = FEATURE_SETS, n_mfcc: int | None = None) -> dict:
    """Extract several feature sets in one pass over ``records``."""
    sets = tuple(sets)
    ex = Extractor(cfg, n_mfcc)
    rows = {s: [] for s in sets}
    labels, frs, sids = [], [], []
    for rec in records:
        feats = ex.extract(rec, sets)
        for s in sets:
            rows[s].append(feats[s])
        labels.append(rec.label)
        frs.append(rec.rotational_freq_hz)
        sids.append(rec.source_id)
    if not labels:
        raise DataError("no segments to extract features from")
    return {s: FeatureTable(s, feature_names(s, cfg, ex.n_mfcc), np.array(rows[s]),
                            np.array(labels), np.array(frs), list(sids)) for s in sets}


@dataclass
class Repetition:
    report: EvalReport
    params: ocsvm.OcSvmHyperParams
    train_idx: np.ndarray
    eval_idx: np.ndarray
    test_idx: np.ndarray


@dataclass
class ExperimentResult:
    mean: EvalReport
    repetitions: list


def split_indices(labels, train_size: int, eval_size: int, rng: np.random.Generator):
    """Draw disjoint healthy train/eval index sets; everything else is the test set."""
    labels = np.asarray(labels)
    healthy = np.flatnonzero(labels == POSITIVE)
    if healthy.size < train_size + eval_size:
        raise DataError(
            f"healthy pool of {healthy.size} is smaller than train ({train_size}) + eval "
            f"({eval_size})")
    perm = rng.permutation(healthy)
    train = np.sort(perm[:train_size])
    ev = np.sort(perm[train_size:train_size + eval_size])
    used = np.zeros(labels.size, dtype=bool)
    used[train] = used[ev] = True
    test = np.flatnonzero(~used)
    return train, ev, test


def run_experiment(cfg: ExperimentConfig, table: FeatureTable, with_fr: bool | None = None,
                   n_cols: int | None = None) -> ExperimentResult:
    """Repeated protocol on one feature table; returns the mean and per-repetition reports.

    Each repetition draws fresh healthy train and eval sets from a generator
    seeded with (seed, repetition), grid-searches (nu, gamma) on the eval
    inlier rate, and tests on the remaining healthy plus all damaged segments.
    """
    with_fr = cfg.with_fr if with_fr is None else with_fr
    x = table.matrix(with_fr, n_cols)
    if not np.all(np.isfinite(x)):
        raise DataError("feature matrix contains non-finite values")
    n_pos = int(np.sum(table.labels == POSITIVE))
    if n_pos < cfg.train_size + cfg.eval_size:
        raise DataError(
            f"healthy pool of {n_pos} is smaller than train ({cfg.train_size}) + eval "
            f"({cfg.eval_size})")
    reps = []
    for r in range(cfg.repetitions):
        rng = np.random.default_rng([cfg.seed, r])
        tr, ev, te = split_indices(table.labels, cfg.train_size, cfg.eval_size, rng)
        assert np.all(table.labels[tr] == POSITIVE) and np.all(table.labels[ev] == POSITIVE)
        gs = ocsvm.grid_search(x[tr], x[ev], cfg.nu_grid, cfg.gamma_grid, tol=cfg.solver_tol,
                               max_iter=cfg.solver_max_iter)
        pred = np.where(gs.model.decision_function(x[te]) >= 0, POSITIVE, NEGATIVE)
        rep = report(confusion(table.labels[te], pred))
        reps.append(Repetition(rep, gs.params, tr, ev, te))
    return ExperimentResult(mean_report(r.report for r in reps), reps)


SWEEP_COLUMNS = ("count", "accuracy", "fpr", "fnr", "ba")


def mfcc_sweep(cfg: ExperimentConfig, table: FeatureTable, counts=range(1, 41),
               with_fr: bool | None = None) -> list[dict]:
    """One experiment per MFCC count using the first ``count`` coefficients of ``table``."""
    counts = list(counts)
    if not counts:
        raise ValueError("no MFCC counts requested")
    if min(counts) < 1:
        raise ValueError("MFCC counts must be >= 1")
    if max(counts) > table.values.shape[1]:
        raise DataError(
            f"table has {table.values.shape[1]} MFCCs, sweep needs {max(counts)}")
    rows = []
    for c in counts:
        m = run_experiment(cfg, table, with_fr, n_cols=c).mean
        rows.append({"count": c, "accuracy": m.accuracy, "fpr": m.fpr, "fnr": m.fnr, "ba": m.ba})
    return rows


def write_rows_csv(path, rows: list[dict], columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] if isinstance(r[c], (int, str)) else repr(float(r[c]))
                        for c in columns])


# --- synthetic datasets -----------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticDatasetSpec:
    """Segment counts per bearing; defaults are the rig's counts scaled down 4x."""

    n_healthy: int = 390
    n_outer_race: int = 630
    n_distributed: int = 680
    outer_severity: float = 0.15
    distributed_severity: float = 0.15
    seed: int = 0
    sample_rate_hz: float = 51_200.0
    segment_s: float = 2.0
    geometry: BearingGeometry = DEFAULT_GEOMETRY

    def scaled(self, factor: float) -> "SyntheticDatasetSpec":
        return replace(self, n_healthy=int(round(self.n_healthy * factor)),
                       n_outer_race=int(round(self.n_outer_race * factor)),
                       n_distributed=int(round(self.n_distributed * factor)))


FULL_SCALE = SyntheticDatasetSpec(1558, 2512, 2728)


def synthetic_records(spec: SyntheticDatasetSpec = SyntheticDatasetSpec()) -> Iterator[SegmentRecord]:
    """Lazily generate labeled 2 s segments at random rig speed and torque levels."""
    from . import synth

    classes = (
        ("healthy", spec.n_healthy, synth.HEALTHY, POSITIVE),
        ("outer", spec.n_outer_race, synth.FaultSpec("outer_race", spec.outer_severity), NEGATIVE),
        ("distributed", spec.n_distributed,
         synth.FaultSpec("distributed", spec.distributed_severity), NEGATIVE),
    )
    for ci, (name, count, fault, label) in enumerate(classes):
        rng = np.random.default_rng([spec.seed, ci])
        speeds = rng.choice(synth.SPEED_LEVELS_RPM, size=count)
        torques = rng.choice(synth.TORQUE_LEVELS, size=count)
        seeds = rng.integers(0, 2**63 - 1, size=count)
        for i in range(count):
            op = synth.OperatingPoint(float(speeds[i]), int(torques[i]), spec.segment_s)
            sig = synth.generate(op, fault, spec.geometry, int(seeds[i]), spec.sample_rate_hz)
            yield SegmentRecord(sig, op.rotational_freq_hz, label, f"{name}-{i:05d}")


def scaled_protocol(cfg: ExperimentConfig, factor: float) -> ExperimentConfig:
    """Shrink the training draw with the dataset; the eval draw keeps its size.

    A small eval set coarsens the inlier-rate grid and lets large-nu cells win
    ties, so only ``train_size`` is scaled (500 -> 125 at 1/4).
    """
    return replace(cfg, train_size=int(round(cfg.train_size * factor)))
