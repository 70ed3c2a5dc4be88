"""Threshold-to-box baseline: derive a box from a heatmap, score it with IoU.

The survival rule is value >= threshold (closed), so threshold 1.0 on a
unit-normalized heatmap always keeps at least the argmax pixel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ThresholdOutOfRange
from .heatmaps import BoundingBox, Heatmap

DEFAULT_THRESHOLDS: tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(1, 10))


def threshold_to_bbox(h: Heatmap, t: float) -> Optional[BoundingBox]:
    """Tightest box containing every pixel with value >= t; None if none survive."""
    if not 0.0 <= t <= 1.0:
        raise ThresholdOutOfRange(f"threshold must be in [0, 1], got {t}")
    ys, xs = np.nonzero(h.values >= t)
    if ys.size == 0:
        return None
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes' pixel areas."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(iw, 0) * max(ih, 0)
    union = a.area + b.area - inter
    return inter / union


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    box: Optional[BoundingBox]
    iou: Optional[float]

    def __post_init__(self):
        if (self.box is None) != (self.iou is None):
            raise ValueError("box and iou must be present or absent together")


@dataclass(frozen=True)
class ThresholdSweep:
    """Per-threshold derived boxes and IoU scores for one heatmap."""

    thresholds: tuple[float, ...]
    results: tuple[SweepPoint, ...]
    best_threshold: Optional[float]
    best_iou: Optional[float]

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        object.__setattr__(self, "results", tuple(self.results))
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if len(self.results) != len(self.thresholds):
            raise ValueError("one result required per threshold")


def sweep_thresholds(
    h: Heatmap,
    truth: BoundingBox,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ThresholdSweep:
    """Derive a box at each threshold and score it against the ground truth.

    The best threshold is the one with the highest IoU; ties keep the
    smallest threshold.
    """
    points = []
    for t in thresholds:
        box = threshold_to_bbox(h, t)
        points.append(SweepPoint(t, box, iou(box, truth) if box is not None else None))
    best_threshold = None
    best_iou = None
    for p in points:
        if p.iou is not None and (best_iou is None or p.iou > best_iou):
            best_threshold, best_iou = p.threshold, p.iou
    return ThresholdSweep(tuple(thresholds), tuple(points), best_threshold, best_iou)
