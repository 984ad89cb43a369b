"""Confusion matrix and rates for the healthy (P) vs damaged (N) decision."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

from .errors import DataError, DegenerateInputError

POSITIVE = "P"   # healthy bearing
NEGATIVE = "N"   # damaged bearing


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class EvalReport:
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    ba: float
    accuracy: float

    FIELDS = ("tpr", "tnr", "fpr", "fnr", "ba", "accuracy")

    def as_dict(self) -> dict:
        return asdict(self)


def confusion(labels_true, labels_pred) -> ConfusionMatrix:
    """Counts with P = healthy as the positive class."""
    t = list(labels_true)
    p = list(labels_pred)
    if len(t) != len(p):
        raise DataError(f"label sequences differ in length ({len(t)} vs {len(p)})")
    if not t:
        raise DataError("no labels")
    bad = {v for v in t + p if v not in (POSITIVE, NEGATIVE)}
    if bad:
        raise DataError(f"labels must be 'P' or 'N', got {sorted(map(str, bad))}")
    tp = sum(a == POSITIVE and b == POSITIVE for a, b in zip(t, p))
    fn = sum(a == POSITIVE and b == NEGATIVE for a, b in zip(t, p))
    fp = sum(a == NEGATIVE and b == POSITIVE for a, b in zip(t, p))
    tn = sum(a == NEGATIVE and b == NEGATIVE for a, b in zip(t, p))
    return ConfusionMatrix(tp, fn, fp, tn)


def report(cm: ConfusionMatrix) -> EvalReport:
    pos = cm.tp + cm.fn
    neg = cm.tn + cm.fp
    if pos == 0 or neg == 0:
        raise DegenerateInputError("both classes must be present to compute per-class rates")
    tpr = cm.tp / pos
    tnr = cm.tn / neg
    return EvalReport(tpr=tpr, tnr=tnr, fpr=1.0 - tnr, fnr=1.0 - tpr, ba=(tpr + tnr) / 2,
                      accuracy=(cm.tp + cm.tn) / cm.total)


def mean_report(reports) -> EvalReport:
    reports = list(reports)
    if not reports:
        raise DataError("no reports to average")
    return EvalReport(**{f: sum(getattr(r, f) for r in reports) / len(reports)
                         for f in EvalReport.FIELDS})


def format_table(rows: dict[str, EvalReport], percent: bool = True) -> str:
    """Aligned text table, one row per named report."""
    scale = 100.0 if percent else 1.0
    width = max([len("feature set")] + [len(k) for k in rows])
    head = f"{'feature set':<{width}}" + "".join(f"{c.upper():>9}" for c in EvalReport.FIELDS)
    lines = [head, "-" * len(head)]
    for name, r in rows.items():
        lines.append(f"{name:<{width}}" + "".join(
            f"{getattr(r, c) * scale:>9.2f}" for c in EvalReport.FIELDS))
    return "\n".join(lines)


def to_csv(rows: dict[str, EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", *EvalReport.FIELDS])
    for name, r in rows.items():
        w.writerow([name, *(repr(getattr(r, c)) for c in EvalReport.FIELDS)])
    return buf.getvalue()
