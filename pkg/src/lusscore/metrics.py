"""Frame-level evaluation: accuracy, confusion matrix, macro P/R, ROC-AUC.

Per-class precision with no predicted instances, and per-class AUC with an
empty class, are undefined: they are reported as NaN and excluded from the
macro means rather than imputed as zero, so tiny test folds do not get
penalized for absent rare classes.  The summary records which classes were
excluded.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateClasses, EmptyInput, LengthMismatch
from .head import Prediction
from .validation import N_CLASSES, check_labels


@dataclass
class ConfusionMatrix:
    """Rows are ground truth, columns are predictions."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_CLASSES, N_CLASSES) or (self.counts < 0).any():
            raise LengthMismatch("confusion counts must be a non-negative 4x4 matrix")

    @classmethod
    def from_pairs(cls, labels: np.ndarray, predicted: np.ndarray) -> "ConfusionMatrix":
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(counts, (labels, predicted), 1)
        return cls(counts)

    @property
    def normalized(self) -> np.ndarray:
        """Each supported row divided by its row sum; zero rows stay zero."""
        row_sums = self.counts.sum(axis=1, keepdims=True)
        out = np.zeros((N_CLASSES, N_CLASSES), dtype=np.float64)
        np.divide(self.counts, row_sums, out=out, where=row_sums > 0)
        return out

    @property
    def zero_support_rows(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.counts.sum(axis=1) == 0))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricsSummary:
    accuracy: float
    precision_per_class: np.ndarray  # NaN where undefined
    recall_per_class: np.ndarray
    macro_precision: float
    macro_recall: float
    auc_per_class: np.ndarray
    macro_auc: float
    confusion: ConfusionMatrix
    n_frames: int

    @property
    def undefined_precision_classes(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(np.isnan(self.precision_per_class)))

    @property
    def undefined_auc_classes(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(np.isnan(self.auc_per_class)))

    def to_key_values(self) -> dict[str, str]:
        def fmt(x: float) -> str:
            return "undefined" if np.isnan(x) else f"{x:.17g}"

        out = {
            "n_frames": str(self.n_frames),
            "accuracy": fmt(self.accuracy),
            "macro_precision": fmt(self.macro_precision),
            "macro_recall": fmt(self.macro_recall),
            "macro_auc": fmt(self.macro_auc),
        }
        for c in range(N_CLASSES):
            out[f"precision_class_{c}"] = fmt(float(self.precision_per_class[c]))
            out[f"recall_class_{c}"] = fmt(float(self.recall_per_class[c]))
            out[f"auc_class_{c}"] = fmt(float(self.auc_per_class[c]))
        out["zero_support_classes"] = (
            ",".join(map(str, self.confusion.zero_support_rows)) or "none"
        )
        return out


def _nan_mean(values: np.ndarray) -> float:
    defined = values[~np.isnan(values)]
    return float(defined.mean()) if defined.size else float("nan")


def roc_auc_binary(scores, positives) -> float | None:
    """One-vs-rest ranking AUC: P(score_pos > score_neg) + half the ties.

    Returns None when either class is empty.  The division is arranged so
    that swapping the positive set for its complement yields values that
    sum to exactly 1.0 in float arithmetic.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    p = np.asarray(positives, dtype=bool).reshape(-1)
    if s.shape[0] != p.shape[0]:
        raise LengthMismatch(f"{s.shape[0]} scores vs {p.shape[0]} flags")
    n_pos = int(p.sum())
    n_neg = p.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return None

    order = np.argsort(s, kind="stable")
    sorted_scores = s[order]
    # average 1-based rank per tie group; halves are exact in float64
    boundaries = np.flatnonzero(np.diff(sorted_scores) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [s.shape[0]]))
    ranks = np.empty(s.shape[0], dtype=np.float64)
    for lo, hi in zip(starts, ends):
        ranks[order[lo:hi]] = (lo + 1 + hi) / 2.0

    rank_sum_pos = float(ranks[p].sum())
    # 2 * (wins + ties/2) is integral: reconstruct exactly
    num2 = int(round(2.0 * rank_sum_pos)) - n_pos * (n_pos + 1)
    den2 = 2 * n_pos * n_neg
    if 2 * num2 <= den2:
        return num2 / den2
    return 1.0 - (den2 - num2) / den2


def roc_curve(scores, positives) -> np.ndarray:
    """(false-positive rate, true-positive rate) points, threshold sweep.

    Thresholds run over distinct scores descending ("predict positive at or
    above"), bracketed by (0,0) and (1,1).  The trapezoidal area under the
    returned points equals roc_auc_binary up to rounding.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    p = np.asarray(positives, dtype=bool).reshape(-1)
    if s.shape[0] != p.shape[0]:
        raise LengthMismatch(f"{s.shape[0]} scores vs {p.shape[0]} flags")
    n_pos = int(p.sum())
    n_neg = p.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClasses("ROC curve needs at least one positive and one negative")

    order = np.argsort(-s, kind="stable")
    sorted_p = p[order]
    sorted_s = s[order]
    tp = np.cumsum(sorted_p)
    fp = np.cumsum(~sorted_p)
    # keep the last index of each tie group: that is the operating point
    # after admitting every sample with score >= the threshold
    last_of_group = np.flatnonzero(np.diff(sorted_s) != 0)
    cut = np.concatenate((last_of_group, [s.shape[0] - 1]))
    points = [(0.0, 0.0)]
    points += [(fp[i] / n_neg, tp[i] / n_pos) for i in cut]
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return np.asarray(points, dtype=np.float64)


def trapezoid_area(points: np.ndarray) -> float:
    x = points[:, 0]
    y = points[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def evaluate(predictions: Sequence[Prediction], labels) -> MetricsSummary:
    """Score aligned (prediction, truth) pairs."""
    if len(predictions) == 0:
        raise EmptyInput("nothing to evaluate")
    y = check_labels(labels)
    if len(predictions) != y.shape[0]:
        raise LengthMismatch(f"{len(predictions)} predictions vs {y.shape[0]} labels")
    predicted = np.asarray([p.predicted for p in predictions], dtype=np.int64)
    probs = np.stack([np.asarray(p.probs, dtype=np.float64) for p in predictions])

    confusion = ConfusionMatrix.from_pairs(y, predicted)
    counts = confusion.counts
    tp = np.diag(counts).astype(np.float64)
    predicted_totals = counts.sum(axis=0).astype(np.float64)
    truth_totals = counts.sum(axis=1).astype(np.float64)

    precision = np.full(N_CLASSES, np.nan)
    np.divide(tp, predicted_totals, out=precision, where=predicted_totals > 0)
    recall = np.full(N_CLASSES, np.nan)
    np.divide(tp, truth_totals, out=recall, where=truth_totals > 0)

    auc = np.full(N_CLASSES, np.nan)
    for c in range(N_CLASSES):
        value = roc_auc_binary(probs[:, c], y == c)
        if value is not None:
            auc[c] = value

    return MetricsSummary(
        accuracy=float(tp.sum() / y.shape[0]),
        precision_per_class=precision,
        recall_per_class=recall,
        macro_precision=_nan_mean(precision),
        macro_recall=_nan_mean(recall),
        auc_per_class=auc,
        macro_auc=_nan_mean(auc),
        confusion=confusion,
        n_frames=int(y.shape[0]),
    )


def write_metrics(
    summary: MetricsSummary, path: str | Path, header_lines: Sequence[str] = ()
) -> None:
    """key=value lines followed by the 4-line confusion count block."""
    lines = list(header_lines)
    lines += [f"{k}={v}" for k, v in summary.to_key_values().items()]
    lines.append("confusion_counts=")
    for row in summary.confusion.counts:
        lines.append(",".join(str(int(v)) for v in row))
    lines.append("confusion_normalized=")
    for row in summary.confusion.normalized:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_roc_csv(points: np.ndarray, path: str | Path, header_lines: Sequence[str] = ()) -> None:
    lines = list(header_lines)
    lines.append("fpr,tpr")
    lines += [f"{fpr:.17g},{tpr:.17g}" for fpr, tpr in points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
