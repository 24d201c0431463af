"""Hard segmentation metrics from binarised predictions.

Undefined ratios (0/0) are reported as ``None`` and dropped from averages;
they never turn into NaN, 0 or 1. Dataset metrics are micro-averaged: add
the :class:`ConfusionCounts` of every image first, then take ratios.
"""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .grid import as_grid, as_mask, check_same_shape

DEFAULT_THRESHOLD = 0.5


def binarize(pr, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Threshold probabilities into a 0/1 mask; ties go to the foreground."""
    if not 0.0 < threshold < 1.0:
        raise ParameterError(f"threshold must lie in (0, 1), got {threshold}")
    return (as_grid(pr, "pr") >= threshold).astype(np.float64)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(pred, truth) -> ConfusionCounts:
    pred = as_mask(pred, "pred").astype(bool)
    truth = as_mask(truth, "truth").astype(bool)
    check_same_shape(pred, truth, "prediction and truth")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    return ConfusionCounts(tp, fp, fn, pred.size - tp - fp - fn)


def total_confusion(pairs) -> ConfusionCounts:
    """Micro-aggregate counts over ``(pred, truth)`` pairs."""
    out = ConfusionCounts()
    for pred, truth in pairs:
        out = out + confusion(pred, truth)
    return out


@dataclass(frozen=True)
class MetricReport:
    iou: float | None
    f1: float | None
    recall: float | None
    precision: float | None

    def to_dict(self, percent: bool = False) -> dict:
        scale = 100.0 if percent else 1.0
        return {k: (None if v is None else v * scale) for k, v in asdict(self).items()}


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def metrics(c: ConfusionCounts) -> MetricReport:
    return MetricReport(
        iou=_ratio(c.tp, c.tp + c.fp + c.fn),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        recall=_ratio(c.tp, c.tp + c.fn),
        precision=_ratio(c.tp, c.tp + c.fp),
    )


METRIC_NAMES = ("iou", "f1", "recall", "precision")


def summarize(reports) -> dict:
    """Mean and sample standard deviation of each metric over reports.

    Undefined entries are skipped; a metric with no defined entries gets
    ``None`` for both statistics.
    """
    out = {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if vals:
            std = statistics.stdev(vals) if len(vals) > 1 else 0.0
            out[name] = {"mean": statistics.fmean(vals), "std": std, "n": len(vals)}
        else:
            out[name] = {"mean": None, "std": None, "n": 0}
    return out
