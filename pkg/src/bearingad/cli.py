"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver non-convergence.
Every CSV written here is a pure function of the inputs, the config and the seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ocsvm, pipeline, synth
from .errors import ConvergenceError, DataError, DegenerateInputError
from .metrics import NEGATIVE, POSITIVE, EvalReport, confusion, format_table, report
from .pipeline import FEATURE_SETS, ExperimentConfig, FeatureTable

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
MANIFEST_COLUMNS = ("signal", "speed_track", "label", "source_id")
SCORE_COLUMNS = ("source_id", "label", "score", "prediction")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        return ExperimentConfig.load(path)
    except (json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"bad config {path}: {exc}") from None


def _sets(text: str) -> tuple:
    sets = tuple(s.strip().upper() for s in text.split(",") if s.strip())
    bad = [s for s in sets if s not in FEATURE_SETS]
    if not sets or bad:
        raise UsageError(f"feature sets must be drawn from {','.join(FEATURE_SETS)}")
    return sets


def _set_path(pattern: str, set_id: str, n_sets: int) -> Path:
    if "{set}" in pattern:
        return Path(pattern.replace("{set}", set_id))
    if n_sets > 1:
        raise UsageError("several feature sets need an output pattern containing {set}")
    return Path(pattern)


def _read_signal(path: Path):
    if path.suffix.lower() == ".wav":
        return synth.read_wav(path)
    return synth.read_signal_csv(path)


def read_manifest(path) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(MANIFEST_COLUMNS) - set(rows[0]):
        raise DataError(f"{path}: manifest needs columns {','.join(MANIFEST_COLUMNS)}")
    for r in rows:
        for key in ("signal", "speed_track"):
            p = Path(r[key])
            r[key] = p if p.is_absolute() else path.parent / p
    return rows


def records_from_manifest(path, cfg: ExperimentConfig):
    for row in read_manifest(path):
        sig = _read_signal(row["signal"])
        track = synth.read_speed_track(row["speed_track"])
        seg = pipeline.segment(sig, track, row["label"], row["source_id"], cfg.segment_s,
                               cfg.max_rpm_spread)
        yield from seg.records


# --- subcommands ---------------------------------------------------------------------------

def cmd_synth(args) -> None:
    cfg = _load_config(args.config)
    geometry = cfg.features.geometry
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    classes = (("healthy", args.healthy, synth.HEALTHY, POSITIVE),
               ("outer_race", args.outer, synth.FaultSpec("outer_race", args.outer_severity),
                NEGATIVE),
               ("distributed", args.distributed,
                synth.FaultSpec("distributed", args.distributed_severity), NEGATIVE))
    rows = []
    for ci, (name, count, fault, label) in enumerate(classes):
        rng = np.random.default_rng([args.seed, ci])
        for k in range(count):
            speeds = rng.choice(synth.SPEED_LEVELS_RPM, size=args.stretches)
            torques = rng.choice(synth.TORQUE_LEVELS, size=args.stretches)
            seed = int(rng.integers(0, 2**63 - 1))
            sig, track = synth.speed_profile_signal(speeds, torques, args.hold_s, fault,
                                                    geometry, seed, args.sample_rate)
            stem = f"{name}_{k:03d}"
            sig_name = f"{stem}.{args.format}"
            if args.format == "wav":
                synth.write_wav(out / sig_name, sig)
            else:
                synth.write_signal_csv(out / sig_name, sig)
            synth.write_speed_track(out / f"{stem}_speed.csv", track)
            rows.append({"signal": sig_name, "speed_track": f"{stem}_speed.csv",
                         "label": label, "source_id": stem})
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, MANIFEST_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} recordings and manifest.csv to {out}")


def cmd_extract(args) -> None:
    cfg = _load_config(args.config)
    sets = _sets(args.sets)
    paths = {s: _set_path(args.out, s, len(sets)) for s in sets}
    tables = pipeline.build_tables(records_from_manifest(args.manifest, cfg), cfg.features,
                                   sets, args.n_mfcc)
    for s, table in tables.items():
        table.to_csv(paths[s])
        print(f"{s}: {len(table)} segments x {len(table.names)} features -> {paths[s]}")


def _healthy_rows(table: FeatureTable) -> np.ndarray:
    idx = np.flatnonzero(table.labels == POSITIVE)
    if idx.size < 2:
        raise DataError("need at least two healthy (P) rows to train")
    return idx


def _columns(table: FeatureTable, with_fr: bool, n_cols: int | None) -> list:
    names = list(table.names if n_cols is None else table.names[:n_cols])
    if n_cols is not None and n_cols > len(table.names):
        raise UsageError(f"--columns {n_cols} exceeds the {len(table.names)} features in the table")
    return names + [pipeline.FR_COLUMN] if with_fr else names


def cmd_train(args) -> None:
    cfg = _load_config(args.config)
    table = FeatureTable.from_csv(args.features)
    names = _columns(table, args.with_fr, args.columns)
    x = table.columns(names)[_healthy_rows(table)]
    model = ocsvm.train(x, ocsvm.OcSvmHyperParams(args.nu, args.gamma), tol=cfg.solver_tol,
                        max_iter=cfg.solver_max_iter,
                        feature_set=table.set_id, feature_names=names)
    model.save(args.out)
    print(f"trained on {x.shape[0]} healthy rows, {len(model.dual_coeffs)} support vectors, "
          f"rho={model.rho:.6g} -> {args.out}")


def cmd_gridsearch(args) -> None:
    cfg = _load_config(args.config)
    table = FeatureTable.from_csv(args.features)
    names = _columns(table, args.with_fr, args.columns)
    x = table.columns(names)
    train_size = args.train_size or cfg.train_size
    eval_size = args.eval_size or cfg.eval_size
    tr, ev, _ = pipeline.split_indices(table.labels, train_size, eval_size,
                                       np.random.default_rng([cfg.seed, 0]))
    gs = ocsvm.grid_search(x[tr], x[ev], cfg.nu_grid, cfg.gamma_grid, tol=cfg.solver_tol,
                           max_iter=cfg.solver_max_iter, feature_set=table.set_id,
                           feature_names=names)
    gs.model.save(args.out)
    if args.rates:
        rows = [{"nu": nu, "gamma": g, "inlier_rate": r} for (nu, g), r in sorted(gs.rates.items())]
        pipeline.write_rows_csv(args.rates, rows, ("nu", "gamma", "inlier_rate"))
    print(f"best nu={gs.params.nu:g} gamma={gs.params.gamma:g} "
          f"eval inlier rate={gs.rates[(gs.params.nu, gs.params.gamma)]:.4f} -> {args.out}")


def cmd_classify(args) -> None:
    model = ocsvm.OcSvmModel.load(args.model)
    table = FeatureTable.from_csv(args.features)
    x = table.columns(model.feature_names) if model.feature_names else table.values
    scores = model.decision_function(x)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for sid, lab, s in zip(table.source_ids, table.labels, scores):
            w.writerow([sid, lab, repr(float(s)), POSITIVE if s >= 0 else NEGATIVE])
    print(f"scored {len(scores)} rows, {int(np.sum(scores >= 0))} inliers -> {args.out}")


def read_scores(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or {"label", "prediction"} - set(rows[0]):
        raise DataError(f"{path}: scores CSV needs label and prediction columns")
    return [r["label"] for r in rows], [r["prediction"] for r in rows]


def cmd_evaluate(args) -> None:
    labels, preds = read_scores(args.scores)
    rep = report(confusion(labels, preds))
    print(format_table({Path(args.scores).stem: rep}))
    if args.out:
        pipeline.write_rows_csv(args.out, [rep.as_dict()], EvalReport.FIELDS)


def _parse_counts(text: str) -> list[int]:
    counts = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        try:
            counts.extend(range(int(lo), int(hi or lo) + 1))
        except ValueError:
            raise UsageError(f"bad count list {text!r}; use e.g. 1-40 or 1,5,13") from None
    return counts


def cmd_sweep(args) -> None:
    cfg = _load_config(args.config)
    table = FeatureTable.from_csv(args.features)
    if table.set_id != "MFCC":
        raise DataError(f"{args.features}: sweep needs an MFCC feature table")
    with_fr = cfg.with_fr if args.with_fr is None else args.with_fr
    rows = pipeline.mfcc_sweep(cfg, table, _parse_counts(args.counts), with_fr)
    pipeline.write_rows_csv(args.out, rows, pipeline.SWEEP_COLUMNS)
    print(f"{len(rows)} MFCC counts -> {args.out}")


REPORT_COLUMNS = ("feature_set", "with_fr", *EvalReport.FIELDS)
REPETITION_COLUMNS = ("feature_set", "with_fr", "repetition", "nu", "gamma", *EvalReport.FIELDS)


def cmd_run(args) -> None:
    cfg = _load_config(args.config)
    sets = cfg.feature_sets
    if args.manifest:
        tables = pipeline.build_tables(records_from_manifest(args.manifest, cfg), cfg.features,
                                       sets)
    elif args.features:
        tables = {s: FeatureTable.from_csv(_set_path(args.features, s, len(sets)), s)
                  for s in sets}
    else:
        spec = pipeline.SyntheticDatasetSpec(seed=cfg.seed, geometry=cfg.features.geometry,
                                             segment_s=cfg.segment_s)
        spec = spec.scaled(args.synthetic)
        cfg = pipeline.scaled_protocol(cfg, args.synthetic)
        tables = pipeline.build_tables(pipeline.synthetic_records(spec), cfg.features, sets)
    variants = (False, True) if args.both else (cfg.with_fr,)
    summary, per_rep, display = [], [], {}
    for s in sets:
        for with_fr in variants:
            res = pipeline.run_experiment(cfg, tables[s], with_fr)
            tag = f"{s}+f_r" if with_fr else s
            display[tag] = res.mean
            summary.append({"feature_set": s, "with_fr": int(with_fr), **res.mean.as_dict()})
            for i, rep in enumerate(res.repetitions):
                per_rep.append({"feature_set": s, "with_fr": int(with_fr), "repetition": i,
                                "nu": rep.params.nu, "gamma": rep.params.gamma,
                                **rep.report.as_dict()})
    print(format_table(display))
    pipeline.write_rows_csv(args.out, summary, REPORT_COLUMNS)
    if args.repetitions_out:
        pipeline.write_rows_csv(args.repetitions_out, per_rep, REPETITION_COLUMNS)


# --- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bearingad", description="One-class bearing anomaly detection.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="JSON experiment config")
        return sp

    sp = with_config(sub.add_parser("synth", help="emit a labeled synthetic dataset"))
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--healthy", type=int, default=2, help="healthy recordings")
    sp.add_argument("--outer", type=int, default=2, help="outer-race fault recordings")
    sp.add_argument("--distributed", type=int, default=2, help="distributed fault recordings")
    sp.add_argument("--outer-severity", type=float, default=pipeline.SyntheticDatasetSpec.outer_severity)
    sp.add_argument("--distributed-severity", type=float,
                    default=pipeline.SyntheticDatasetSpec.distributed_severity)
    sp.add_argument("--stretches", type=int, default=4, help="constant-speed stretches per recording")
    sp.add_argument("--hold-s", type=float, default=9.0, help="duration of each stretch")
    sp.add_argument("--sample-rate", type=float, default=synth.SAMPLE_RATE_HZ)
    sp.add_argument("--format", choices=("wav", "csv"), default="wav")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = with_config(sub.add_parser("extract", help="signals -> feature CSV"))
    sp.add_argument("--manifest", required=True,
                    help="CSV with columns signal,speed_track,label,source_id")
    sp.add_argument("--sets", default="MFCC", help="comma-separated feature sets")
    sp.add_argument("--n-mfcc", type=int, help="MFCCs to keep (default from config)")
    sp.add_argument("--out", required=True, help="output CSV; use {set} for several sets")
    sp.set_defaults(func=cmd_extract)

    def table_args(sp):
        sp.add_argument("--features", required=True, help="feature CSV")
        sp.add_argument("--with-fr", action="store_true", help="append the f_r column")
        sp.add_argument("--columns", type=int, help="use only the first N feature columns")

    sp = with_config(sub.add_parser("train", help="features -> model file"))
    table_args(sp)
    sp.add_argument("--nu", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--out", required=True, help="model JSON")
    sp.set_defaults(func=cmd_train)

    sp = with_config(sub.add_parser("gridsearch", help="select (nu, gamma) and save the model"))
    table_args(sp)
    sp.add_argument("--train-size", type=int)
    sp.add_argument("--eval-size", type=int)
    sp.add_argument("--out", required=True, help="model JSON")
    sp.add_argument("--rates", help="CSV of eval inlier rate per grid cell")
    sp.set_defaults(func=cmd_gridsearch)

    sp = sub.add_parser("classify", help="model + features -> scores CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("evaluate", help="scores + labels -> report")
    sp.add_argument("--scores", required=True, help="CSV with label and prediction columns")
    sp.add_argument("--out", help="report CSV")
    sp.set_defaults(func=cmd_evaluate)

    sp = with_config(sub.add_parser("sweep", help="experiment per MFCC count"))
    sp.add_argument("--features", required=True, help="MFCC feature CSV")
    sp.add_argument("--counts", default="1-40", help="e.g. 1-40 or 1,5,13")
    fr = sp.add_mutually_exclusive_group()
    fr.add_argument("--with-fr", dest="with_fr", action="store_true", default=None)
    fr.add_argument("--without-fr", dest="with_fr", action="store_false")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sweep)

    sp = with_config(sub.add_parser("run", help="full repeated protocol"))
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--manifest", help="recordings manifest to extract from")
    src.add_argument("--features", help="feature CSV pattern containing {set}")
    src.add_argument("--synthetic", type=float, default=0.25,
                     help="scale of the built-in synthetic dataset (default 0.25)")
    sp.add_argument("--both", action="store_true", help="evaluate with and without f_r")
    sp.add_argument("--out", required=True, help="summary CSV")
    sp.add_argument("--repetitions-out", help="per-repetition CSV")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"bearingad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"bearingad: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, DegenerateInputError, OSError) as exc:
        print(f"bearingad: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"bearingad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
