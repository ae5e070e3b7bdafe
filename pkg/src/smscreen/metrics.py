"""Evaluation metrics: confusion, precision/recall/F1, AUPRC, calibration, kappa.

Conventions pinned here and relied on by tests:
  zero-division precision/recall -> 0 (counted, warned once per report)
  AUPRC uses step interpolation; tied scores share one threshold
  calibration bins are equal width, right-closed except the first
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus
from .labels import CLASS_LABELS, ClassLabel, parse_label

log = logging.getLogger(__name__)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, cols = predicted class
    classes: tuple[ClassLabel, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(
    y_true: Sequence[ClassLabel],
    y_pred: Sequence[ClassLabel],
    classes: Optional[Sequence[ClassLabel]] = None,
) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    cls = tuple(classes) if classes is not None else CLASS_LABELS
    index = {c: i for i, c in enumerate(cls)}
    counts = np.zeros((len(cls), len(cls)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts=counts, classes=cls)


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict[ClassLabel, ClassScores]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_division_count: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "zero_division_count": self.zero_division_count,
            "per_class": {
                c.value: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for c, s in self.per_class.items()
            },
        }


def report(cm: ConfusionMatrix) -> EvalReport:
    """Per-class and aggregate metrics from a confusion matrix."""
    if cm.total == 0:
        raise ValueError("cannot report on an empty confusion matrix")
    zero_divisions = 0
    per_class: dict[ClassLabel, ClassScores] = {}
    for i, label in enumerate(cm.classes):
        tp = int(cm.counts[i, i])
        fp = int(cm.counts[:, i].sum()) - tp
        fn = int(cm.counts[i, :].sum()) - tp
        if tp + fp == 0:
            precision = 0.0
            zero_divisions += 1
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 0.0
            zero_divisions += 1
        else:
            recall = tp / (tp + fn)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        per_class[label] = ClassScores(precision=precision, recall=recall, f1=f1, support=tp + fn)
    if zero_divisions:
        log.warning("report: %d precision/recall zero-division(s) pinned to 0", zero_divisions)
    supports = np.array([s.support for s in per_class.values()], dtype=np.float64)
    precisions = np.array([s.precision for s in per_class.values()])
    recalls = np.array([s.recall for s in per_class.values()])
    f1s = np.array([s.f1 for s in per_class.values()])
    total_support = supports.sum()
    return EvalReport(
        accuracy=float(np.trace(cm.counts)) / cm.total,
        per_class=per_class,
        macro_precision=float(precisions.mean()),
        macro_recall=float(recalls.mean()),
        macro_f1=float(f1s.mean()),
        weighted_precision=float((supports * precisions).sum() / total_support),
        weighted_recall=float((supports * recalls).sum() / total_support),
        weighted_f1=float((supports * f1s).sum() / total_support),
        zero_division_count=zero_divisions,
    )


def auprc(pairs: Sequence[tuple[float, bool]]) -> float:
    """Average precision by step interpolation over distinct score thresholds."""
    if not pairs:
        raise ValueError("empty score set")
    n_pos = sum(1 for _, positive in pairs if positive)
    if n_pos == 0 or n_pos == len(pairs):
        raise ValueError("auprc needs at least one positive and one negative")
    for score, _ in pairs:
        if not math.isfinite(score):
            raise ValueError("scores must be finite")

    by_score: dict[float, tuple[int, int]] = {}
    for score, positive in pairs:
        tp, total = by_score.get(score, (0, 0))
        by_score[score] = (tp + (1 if positive else 0), total + 1)

    ap = 0.0
    tp = 0
    seen = 0
    prev_recall = 0.0
    for score in sorted(by_score, reverse=True):
        group_tp, group_total = by_score[score]
        tp += group_tp
        seen += group_total
        recall = tp / n_pos
        precision = tp / seen
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def precision_recall_curve(pairs: Sequence[tuple[float, bool]]) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) points at each distinct score, descending."""
    n_pos = sum(1 for _, positive in pairs if positive)
    by_score: dict[float, tuple[int, int]] = {}
    for score, positive in pairs:
        tp, total = by_score.get(score, (0, 0))
        by_score[score] = (tp + (1 if positive else 0), total + 1)
    points = []
    tp = 0
    seen = 0
    for score in sorted(by_score, reverse=True):
        group_tp, group_total = by_score[score]
        tp += group_tp
        seen += group_total
        points.append((score, tp / seen, tp / n_pos if n_pos else 0.0))
    return points


@dataclass
class CalibrationBin:
    mean_predicted: float
    observed_frequency: float
    count: int


@dataclass
class CalibrationTable:
    bins: list[CalibrationBin]
    nbins: int


def calibration(probs: Sequence[float], y: Sequence[bool], nbins: int = 10) -> CalibrationTable:
    """Equal-width reliability bins on [0,1]; empty bins are omitted."""
    if len(probs) != len(y):
        raise ValueError("probs and y length mismatch")
    if nbins < 2:
        raise ValueError("nbins must be at least 2")
    sums = [0.0] * nbins
    hits = [0] * nbins
    counts = [0] * nbins
    for p, label in zip(probs, y):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability outside [0,1]: {p}")
        # right-closed bins except the first: [0, 1/n], (1/n, 2/n], ...
        idx = 0 if p == 0.0 else min(math.ceil(p * nbins) - 1, nbins - 1)
        sums[idx] += p
        hits[idx] += 1 if label else 0
        counts[idx] += 1
    bins = [
        CalibrationBin(mean_predicted=sums[i] / counts[i], observed_frequency=hits[i] / counts[i], count=counts[i])
        for i in range(nbins)
        if counts[i] > 0
    ]
    return CalibrationTable(bins=bins, nbins=nbins)


def cohen_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement between two label sequences."""
    if len(a) != len(b):
        raise ValueError("sequences must have equal length")
    if len(a) == 0:
        raise ValueError("sequences must be nonempty")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    count_a = Counter(a)
    count_b = Counter(b)
    p_e = sum(count_a[k] * count_b.get(k, 0) for k in count_a) / (n * n)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


PROB_COLUMNS = tuple(f"p_{c.value}" for c in CLASS_LABELS)


@dataclass
class PredictionScore:
    report: EvalReport
    confusion: ConfusionMatrix
    calibration: Optional[CalibrationTable]
    suicide_auprc: Optional[float]
    pr_curve: Optional[list[tuple[float, float, float]]]


def score_prediction_file(test: Corpus, path: str | Path) -> PredictionScore:
    """Score an external prediction CSV (id,pred_label[,p_<class>...]) against a test corpus.

    Requires a complete one-to-one join on post id. When the 10 probability
    columns are present, adds suicide-class AUPRC and calibration.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "id" not in fields or "pred_label" not in fields:
            raise ValueError(f"{path}: header must include id,pred_label")
        has_probs = all(col in fields for col in PROB_COLUMNS)
        rows = list(reader)

    truth = {p.id: p.label for p in test}
    unknown = [r["id"] for r in rows if r["id"] not in truth]
    if unknown:
        raise ValueError(f"{path}: prediction ids not in test corpus: {', '.join(unknown[:10])}")
    seen_ids = {r["id"] for r in rows}
    missing = [pid for pid in truth if pid not in seen_ids]
    if missing:
        raise ValueError(f"{path}: test ids without predictions: {', '.join(missing[:10])}")

    y_true: list[ClassLabel] = []
    y_pred: list[ClassLabel] = []
    suicide_scores: list[tuple[float, bool]] = []
    suicide_probs: list[float] = []
    suicide_truth: list[bool] = []
    for lineno, row in enumerate(rows, start=2):
        y_true.append(truth[row["id"]])
        y_pred.append(parse_label(row["pred_label"]))
        if has_probs:
            probs = [float(row[col]) for col in PROB_COLUMNS]
            if abs(sum(probs) - 1.0) > 1e-6:
                raise ValueError(f"{path}:{lineno}: probability row sums to {sum(probs)}, not 1")
            p_suicide = probs[CLASS_LABELS.index(ClassLabel.SUICIDE)]
            positive = truth[row["id"]] == ClassLabel.SUICIDE
            suicide_scores.append((p_suicide, positive))
            suicide_probs.append(p_suicide)
            suicide_truth.append(positive)

    cm = confusion(y_true, y_pred)
    rep = report(cm)
    cal = None
    suicide_ap = None
    curve = None
    if has_probs:
        cal = calibration(suicide_probs, suicide_truth)
        n_pos = sum(suicide_truth)
        if 0 < n_pos < len(suicide_truth):
            suicide_ap = auprc(suicide_scores)
            curve = precision_recall_curve(suicide_scores)
        else:
            log.warning("suicide AUPRC skipped: need both positives and negatives in the test set")
    return PredictionScore(
        report=rep, confusion=cm, calibration=cal, suicide_auprc=suicide_ap, pr_curve=curve
    )


def render_report_text(rep: EvalReport, title: str = "Evaluation report") -> str:
    lines = [title, "=" * len(title), ""]
    lines.append(f"{'Class':<22}{'Precision':>11}{'Recall':>9}{'F1':>7}{'Support':>9}")
    for label, s in rep.per_class.items():
        lines.append(
            f"{label.display_name:<22}{s.precision:>11.2f}{s.recall:>9.2f}{s.f1:>7.2f}{s.support:>9}"
        )
    lines.append("")
    lines.append(f"Accuracy:            {rep.accuracy:.2f}")
    lines.append(f"Macro F1:            {rep.macro_f1:.2f}")
    lines.append(f"Weighted F1:         {rep.weighted_f1:.2f}")
    lines.append(f"Macro precision:     {rep.macro_precision:.2f}")
    lines.append(f"Macro recall:        {rep.macro_recall:.2f}")
    lines.append(f"Weighted precision:  {rep.weighted_precision:.2f}")
    lines.append(f"Weighted recall:     {rep.weighted_recall:.2f}")
    return "\n".join(lines) + "\n"


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    header = "true\\pred," + ",".join(c.value for c in cm.classes)
    lines = [header]
    for i, label in enumerate(cm.classes):
        lines.append(label.value + "," + ",".join(str(int(v)) for v in cm.counts[i]))
    return "\n".join(lines) + "\n"


def calibration_to_csv(table: CalibrationTable) -> str:
    lines = ["mean_predicted,observed_frequency,count"]
    for b in table.bins:
        lines.append(f"{b.mean_predicted},{b.observed_frequency},{b.count}")
    return "\n".join(lines) + "\n"


def pr_curve_to_csv(points: Sequence[tuple[float, float, float]]) -> str:
    lines = ["threshold,precision,recall"]
    for t, p, r in points:
        lines.append(f"{t},{p},{r}")
    return "\n".join(lines) + "\n"
