"""Heatmaps, bounding boxes, and crowd-annotation aggregation.

A heatmap is a dense grid of non-negative per-pixel importance values; both
crowd annotations (after aggregation) and explanation saliency maps are
represented this way.  Boxes use the half-open pixel convention: pixel
(x, y) is inside iff x_min <= x < x_max and y_min <= y < y_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoxOutOfCanvas,
    EmptyAnnotationSet,
    NegativeValue,
    NonFiniteValue,
    ZeroMass,
)


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Dense H x W grid of finite, non-negative importance values."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"heatmap values must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValue("heatmap contains NaN or infinite values")
        if (arr < 0).any():
            raise NegativeValue("heatmap contains negative values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def is_unit_normalized(self) -> bool:
        """True if the max value is exactly 1, or the map is all zero."""
        m = float(self.values.max())
        return m == 1.0 or m == 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Heatmap):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, half-open on both axes."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box coordinates must be non-negative: {self}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"empty box rejected: {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def fits_canvas(self, width: int, height: int) -> bool:
        return self.x_max <= width and self.y_max <= height


@dataclass(frozen=True)
class AnnotationSet:
    """All annotators' boxes for one image on a fixed canvas."""

    image_id: str
    boxes: tuple[tuple[str, BoundingBox], ...]
    canvas: tuple[int, int]  # (width, height)

    def __post_init__(self):
        width, height = self.canvas
        if width <= 0 or height <= 0:
            raise ValueError(f"canvas dimensions must be positive, got {self.canvas}")
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for annotator_id, box in self.boxes:
            if not box.fits_canvas(width, height):
                raise BoxOutOfCanvas(
                    f"image {self.image_id!r}, annotator {annotator_id!r}: "
                    f"{box} exceeds canvas {width}x{height}"
                )


def aggregate_annotations(annotations: AnnotationSet) -> Heatmap:
    """Build the frequency-weighted annotation heatmap.

    Each pixel's weight is the number of annotation boxes covering it,
    divided by the maximum cover count, so the result is unit-normalized.
    """
    if not annotations.boxes:
        raise EmptyAnnotationSet(f"image {annotations.image_id!r} has no annotation boxes")
    width, height = annotations.canvas
    counts = np.zeros((height, width), dtype=np.int64)
    for _, box in annotations.boxes:
        counts[box.y_min:box.y_max, box.x_min:box.x_max] += 1
    return Heatmap(counts / counts.max())


def unit_normalize(h: Heatmap) -> Heatmap:
    """Scale so the max value is 1; an all-zero map is returned unchanged."""
    m = float(h.values.max())
    if m == 0.0 or m == 1.0:
        return h
    return Heatmap(h.values / m)


def flatten(h: Heatmap) -> np.ndarray:
    """Row-major 1-D view of the heatmap, length width*height."""
    return h.values.reshape(-1)


def mass_normalize(v) -> np.ndarray:
    """Scale a non-negative vector to sum to 1."""
    arr = np.asarray(v, dtype=np.float64)
    if (arr < 0).any():
        raise NegativeValue("mass normalization requires non-negative entries")
    total = arr.sum()
    if total == 0.0:
        raise ZeroMass("cannot mass-normalize an all-zero vector")
    return arr / total
