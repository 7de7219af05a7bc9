"""Evaluation metrics for imbalanced binary classification, plus cohort
statistics used in exploratory analysis.

AUROC uses the rank (Mann-Whitney) formulation with ties counted half.
AUPRC is average precision with step interpolation, tied scores grouped
as one block; trapezoidal PR interpolation overestimates, and early
stopping needs an unambiguous signal. Threshold comparisons are
inclusive (predict positive when score >= threshold).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .ingest import Encounter

INPATIENT_BUCKETS = ("0", "1", "2", "3+")


def _validated(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DomainError("scores and labels must be 1-d and aligned")
    return s, y


def _score_blocks(scores: np.ndarray, labels: np.ndarray):
    """Cumulative (tp, fp) at the end of each distinct descending-score block."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    n = len(s)
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), n - 1]
    tp = np.cumsum(y)[ends].astype(np.float64)
    seen = (ends + 1).astype(np.float64)
    fp = seen - tp
    return tp, fp


def auroc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties half)."""
    s, y = _validated(scores, labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("auroc needs both classes present")

    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    n = len(s)
    ends = np.r_[np.flatnonzero(np.diff(sorted_s) != 0), n - 1]
    starts = np.r_[0, ends[:-1] + 1]
    # Average 1-based rank within each tied block.
    block_rank = (starts + ends) / 2.0 + 1.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(block_rank, ends - starts + 1)
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auprc(scores, labels) -> float:
    """Average precision: sum of (recall step) x (precision) over blocks."""
    s, y = _validated(scores, labels)
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise DomainError("auprc needs at least one positive")
    tp, fp = _score_blocks(s, y)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    steps = np.diff(np.r_[0.0, recall])
    return float((steps * precision).sum())


def roc_points(scores, labels) -> list[tuple[float, float]]:
    """(fpr, tpr) per score block, anchored at (0,0); last block is (1,1)."""
    s, y = _validated(scores, labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("roc curve needs both classes present")
    tp, fp = _score_blocks(s, y)
    pts = [(0.0, 0.0)]
    pts.extend((float(f / n_neg), float(t / n_pos)) for f, t in zip(fp, tp))
    return pts


def pr_points(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) per score block, anchored at (0,1)."""
    s, y = _validated(scores, labels)
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise DomainError("pr curve needs at least one positive")
    tp, fp = _score_blocks(s, y)
    pts = [(0.0, 1.0)]
    pts.extend((float(t / n_pos), float(t / (t + f))) for t, f in zip(tp, fp))
    return pts


@dataclass
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class ThresholdMetrics:
    threshold: float
    confusion: Confusion
    precision: float
    recall: float
    f1: float
    balanced_accuracy: float


def confusion_at(scores, labels, threshold: float = 0.5) -> ThresholdMetrics:
    """Hard-decision metrics with predict-1 iff score >= threshold.

    Degenerate denominators resolve to 0 (e.g. precision with no predicted
    positives) so the report stays total.
    """
    s, y = _validated(scores, labels)
    pred = s >= threshold
    actual = y == 1
    tp = int((pred & actual).sum())
    fp = int((pred & ~actual).sum())
    fn = int((~pred & actual).sum())
    tn = int((~pred & ~actual).sum())

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    tnr = tn / (tn + fp) if tn + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ThresholdMetrics(
        threshold=threshold,
        confusion=Confusion(tp=tp, fp=fp, tn=tn, fn=fn),
        precision=precision,
        recall=recall,
        f1=f1,
        balanced_accuracy=(recall + tnr) / 2.0,
    )


@dataclass
class EvalReport:
    auroc: float
    auprc: float
    precision: float
    recall: float
    f1: float
    balanced_accuracy: float
    confusion: Confusion
    threshold: float = 0.5
    roc_points: list = field(repr=False, default_factory=list)
    pr_points: list = field(repr=False, default_factory=list)

    def scalars(self) -> dict:
        d = asdict(self)
        d["confusion"] = asdict(self.confusion)
        del d["roc_points"], d["pr_points"]
        return d


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    thr = confusion_at(scores, labels, threshold)
    return EvalReport(
        auroc=auroc(scores, labels),
        auprc=auprc(scores, labels),
        precision=thr.precision,
        recall=thr.recall,
        f1=thr.f1,
        balanced_accuracy=thr.balanced_accuracy,
        confusion=thr.confusion,
        threshold=threshold,
        roc_points=roc_points(scores, labels),
        pr_points=pr_points(scores, labels),
    )


def write_report(report: EvalReport, out_dir: str | Path) -> None:
    """report.json plus roc.csv / pr.csv point files for external plotting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.scalars(), indent=2) + "\n")
    for name, pts, header in (("roc.csv", report.roc_points, "fpr,tpr"),
                              ("pr.csv", report.pr_points, "recall,precision")):
        lines = [header] + [f"{x!r},{y!r}" for x, y in pts]
        (out / name).write_text("\n".join(lines) + "\n")


def load_report(out_dir: str | Path) -> dict:
    return json.loads((Path(out_dir) / "report.json").read_text())


@dataclass
class EdaReport:
    """Cohort breakdowns: utilization buckets, stay length, disposition."""

    readmit_rate_by_prior_inpatient: dict[str, tuple[int, float]]
    los_median_by_outcome: dict[str, float]
    readmit_rate_by_disposition: dict[int, tuple[int, float]]


def _bucket(n_inpatient: int) -> str:
    return str(n_inpatient) if n_inpatient < 3 else "3+"


def eda_report(encounters: Sequence[Encounter], labels: Iterable[int]) -> EdaReport:
    y = np.asarray(list(labels), dtype=np.float64)
    if len(encounters) == 0 or len(encounters) != len(y):
        raise DomainError("need aligned, non-empty encounters and labels")

    by_bucket: dict[str, list[float]] = {b: [] for b in INPATIENT_BUCKETS}
    by_disp: dict[int, list[float]] = {}
    los = {"readmitted": [], "not_readmitted": []}
    for e, label in zip(encounters, y):
        by_bucket[_bucket(e.number_inpatient)].append(label)
        by_disp.setdefault(e.discharge_disposition_id, []).append(label)
        los["readmitted" if label == 1 else "not_readmitted"].append(e.time_in_hospital)

    def rate(values: list[float]) -> tuple[int, float]:
        return len(values), (float(np.mean(values)) if values else 0.0)

    return EdaReport(
        readmit_rate_by_prior_inpatient={b: rate(v) for b, v in by_bucket.items()},
        los_median_by_outcome={k: (float(np.median(v)) if v else 0.0)
                               for k, v in los.items()},
        readmit_rate_by_disposition={k: rate(v) for k, v in sorted(by_disp.items())},
    )


def write_eda_csv(report: EdaReport, dest: str | Path) -> None:
    """All three breakdowns in one CSV, keyed by a table column."""
    lines = ["table,key,n,value"]
    for bucket, (n, r) in report.readmit_rate_by_prior_inpatient.items():
        lines.append(f"readmit_rate_by_prior_inpatient,{bucket},{n},{r!r}")
    for outcome, med in report.los_median_by_outcome.items():
        lines.append(f"los_median_by_outcome,{outcome},,{med!r}")
    for code, (n, r) in report.readmit_rate_by_disposition.items():
        lines.append(f"readmit_rate_by_disposition,{code},{n},{r!r}")
    Path(dest).write_text("\n".join(lines) + "\n")
