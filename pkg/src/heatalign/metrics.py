"""The twelve distance metrics on flattened heatmap vectors.

All functions take two equal-length 1-D vectors and return a float distance
(0 means identical).  Metrics that interpret their inputs as probability
distributions (Wasserstein, Jensen-Shannon) mass-normalize internally, so
they are invariant to positive rescaling of either input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    DimensionMismatch,
    LengthMismatch,
    NegativeValue,
    TooFewMethods,
    ZeroMass,
)
from .heatmaps import Heatmap, flatten, mass_normalize


class Metric(Enum):
    """The metric battery; member name is the acronym, value the display name."""

    WJ = "Weighted Jaccard"
    WA = "Wasserstein"
    BC = "Bray-Curtis"
    CA = "Canberra"
    CY = "Chebyshev"
    MA = "Manhattan"
    CR = "Correlation"
    CS = "Cosine"
    EU = "Euclidean"
    JS = "Jensen-Shannon"
    MI = "Minkowski"
    SE = "squared Euclidean"

    @property
    def display_name(self) -> str:
        return self.value


def _as_pair(u, v, require_nonnegative: bool = False) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(u, dtype=np.float64).reshape(-1)
    b = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise LengthMismatch("vectors must be non-empty")
    if require_nonnegative and ((a < 0).any() or (b < 0).any()):
        raise NegativeValue("metric requires non-negative entries")
    return a, b


def weighted_jaccard(u, v) -> float:
    """1 - sum(min(u_i, v_i)) / sum(max(u_i, v_i))."""
    a, b = _as_pair(u, v, require_nonnegative=True)
    denom = np.maximum(a, b).sum()
    if denom == 0.0:
        raise DegenerateInput("weighted Jaccard undefined for two all-zero vectors")
    return float(1.0 - np.minimum(a, b).sum() / denom)


def wasserstein_1d(u, v) -> float:
    """Exact 1-D earth mover's distance on the index line with unit spacing.

    Both inputs are mass-normalized; the distance is the L1 norm of the
    difference of the cumulative sums.
    """
    a, b = _as_pair(u, v)
    a = mass_normalize(a)
    b = mass_normalize(b)
    return float(np.abs(np.cumsum(a - b)).sum())


def bray_curtis(u, v) -> float:
    """sum|u_i - v_i| / sum|u_i + v_i|."""
    a, b = _as_pair(u, v, require_nonnegative=True)
    denom = np.abs(a + b).sum()
    if denom == 0.0:
        raise DegenerateInput("Bray-Curtis undefined for two all-zero vectors")
    return float(np.abs(a - b).sum() / denom)


def canberra(u, v) -> float:
    """sum |u_i - v_i| / (|u_i| + |v_i|); terms with u_i = v_i = 0 contribute 0."""
    a, b = _as_pair(u, v, require_nonnegative=True)
    denom = np.abs(a) + np.abs(b)
    mask = denom > 0
    return float((np.abs(a - b)[mask] / denom[mask]).sum())


def chebyshev(u, v) -> float:
    """max_i |u_i - v_i|."""
    a, b = _as_pair(u, v)
    return float(np.abs(a - b).max())


def manhattan(u, v) -> float:
    """sum |u_i - v_i|."""
    a, b = _as_pair(u, v)
    return float(np.abs(a - b).sum())


def correlation_distance(u, v) -> float:
    """1 - cosine similarity of the mean-centered vectors, in [0, 2]."""
    a, b = _as_pair(u, v)
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.linalg.norm(ac)
    nb = np.linalg.norm(bc)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("correlation distance undefined for a constant vector")
    d = 1.0 - float(ac @ bc) / float(na * nb)
    return min(max(d, 0.0), 2.0)


def cosine_distance(u, v) -> float:
    """1 - u.v / (||u|| ||v||); in [0, 1] for non-negative inputs."""
    a, b = _as_pair(u, v)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("cosine distance undefined for an all-zero vector")
    d = 1.0 - float(a @ b) / float(na * nb)
    return max(d, 0.0)


def euclidean(u, v) -> float:
    """sqrt(sum (u_i - v_i)^2)."""
    a, b = _as_pair(u, v)
    return float(np.linalg.norm(a - b))


def jensen_shannon(u, v) -> float:
    """Jensen-Shannon distance with base-2 logs, bounded by 1.

    Both inputs are mass-normalized; zero entries contribute zero to the
    KL terms against the pointwise mean.
    """
    a, b = _as_pair(u, v)
    p = mass_normalize(a)
    q = mass_normalize(b)
    m = (p + q) / 2.0

    def _kl(x: np.ndarray) -> float:
        idx = x > 0
        return float((x[idx] * np.log2(x[idx] / m[idx])).sum())

    divergence = (_kl(p) + _kl(q)) / 2.0
    return math.sqrt(max(divergence, 0.0))


def minkowski(u, v, order: float = 3.0) -> float:
    """(sum |u_i - v_i|^order)^(1/order); order 3 by default."""
    if order < 1:
        raise ValueError(f"Minkowski order must be >= 1, got {order}")
    a, b = _as_pair(u, v)
    diff = np.abs(a - b)
    if order == 1:
        return float(diff.sum())
    if order == math.inf:
        return float(diff.max())
    return float((diff ** order).sum() ** (1.0 / order))


def squared_euclidean(u, v) -> float:
    """sum (u_i - v_i)^2."""
    a, b = _as_pair(u, v)
    d = a - b
    return float(d @ d)


METRIC_FUNCTIONS: Mapping[Metric, Callable] = {
    Metric.WJ: weighted_jaccard,
    Metric.WA: wasserstein_1d,
    Metric.BC: bray_curtis,
    Metric.CA: canberra,
    Metric.CY: chebyshev,
    Metric.MA: manhattan,
    Metric.CR: correlation_distance,
    Metric.CS: cosine_distance,
    Metric.EU: euclidean,
    Metric.JS: jensen_shannon,
    Metric.MI: minkowski,
    Metric.SE: squared_euclidean,
}

ALL_METRICS: tuple[Metric, ...] = tuple(Metric)


def compute(metric: Metric, u, v) -> float:
    """Apply one metric by identifier."""
    return METRIC_FUNCTIONS[metric](u, v)


def min_max_normalize(row: Sequence[Optional[float]]) -> tuple[Optional[float], ...]:
    """Min-max rescale a score row to [0, 1]; a constant row maps to all 0.

    None entries (cells a metric could not compute) stay None and are
    ignored when locating the extremes.
    """
    present = [x for x in row if x is not None]
    if not present:
        return tuple(row)
    lo, hi = min(present), max(present)
    if hi == lo:
        return tuple(0.0 if x is not None else None for x in row)
    span = hi - lo
    return tuple((x - lo) / span if x is not None else None for x in row)


@dataclass(frozen=True)
class ScoreTable:
    """Per-image matrix of metric x method distances, raw and normalized.

    `errors` records why individual cells are missing; it is bookkeeping,
    not data, and excluded from equality.
    """

    image_id: str
    methods: tuple[str, ...]
    raw: Mapping[Metric, tuple[Optional[float], ...]]
    normalized: Mapping[Metric, tuple[Optional[float], ...]]
    errors: Mapping[tuple[Metric, str], str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "raw", dict(self.raw))
        object.__setattr__(self, "normalized", dict(self.normalized))
        object.__setattr__(self, "errors", dict(self.errors))
        n = len(self.methods)
        for name, table in (("raw", self.raw), ("normalized", self.normalized)):
            for metric, row in table.items():
                if len(row) != n:
                    raise ValueError(
                        f"{name} row {metric.name} has {len(row)} cells for {n} methods"
                    )

    @property
    def metrics(self) -> tuple[Metric, ...]:
        return tuple(self.raw)

    def raw_score(self, metric: Metric, method: str) -> Optional[float]:
        return self.raw[metric][self.methods.index(method)]

    def normalized_score(self, metric: Metric, method: str) -> Optional[float]:
        return self.normalized[metric][self.methods.index(method)]

    def best_methods(self, metric: Metric) -> tuple[str, ...]:
        """Methods with the lowest raw distance for one metric (all ties)."""
        row = self.raw[metric]
        present = [x for x in row if x is not None]
        if not present:
            return ()
        lo = min(present)
        return tuple(m for m, x in zip(self.methods, row) if x is not None and x == lo)


def compute_score_table(
    annotation: Heatmap,
    explanations: Mapping[str, Heatmap],
    metrics: Sequence[Metric] = ALL_METRICS,
    image_id: str = "",
) -> ScoreTable:
    """Score every explanation heatmap against the annotation heatmap.

    A metric that rejects a particular heatmap pair (constant vector for
    correlation, zero vector for the mass-based metrics) yields a missing
    cell rather than aborting the table.
    """
    methods = tuple(explanations)
    if len(methods) < 2:
        raise TooFewMethods(f"need at least 2 methods to normalize, got {len(methods)}")
    for method, h in explanations.items():
        if (h.width, h.height) != (annotation.width, annotation.height):
            raise DimensionMismatch(
                f"method {method!r} heatmap is {h.width}x{h.height}, "
                f"annotation is {annotation.width}x{annotation.height}"
            )
    u = flatten(annotation)
    vectors = {m: flatten(explanations[m]) for m in methods}

    raw: dict[Metric, tuple[Optional[float], ...]] = {}
    errors: dict[tuple[Metric, str], str] = {}
    for metric in metrics:
        func = METRIC_FUNCTIONS[metric]
        row: list[Optional[float]] = []
        for method in methods:
            try:
                row.append(func(u, vectors[method]))
            except (DegenerateInput, ZeroMass) as exc:
                row.append(None)
                errors[(metric, method)] = str(exc)
        raw[metric] = tuple(row)

    normalized = {metric: min_max_normalize(row) for metric, row in raw.items()}
    return ScoreTable(image_id, methods, raw, normalized, errors)
