"""Rankings of explainability methods and Rank-Biased Overlap comparison.

Human rankings come from vote tallies (zero-vote methods drop out, so a
human ranking can be shorter than the metric rankings); metric rankings
come from score-table rows.  RBO compares two rankings by prefix agreement,
truncated at the depth of the smaller list.

Persistence conventions: for 0 < p < 1 the similarity is the truncated
geometric sum (1-p) * sum_d p^(d-1) * A_d, so two identical length-D lists
score 1 - p^D, not 1.  p = 0 degenerates to the depth-1 agreement (the
first position carries all the weight) and p = 1 to the plain average of
A_d over all depths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import (
    DepthOutOfRange,
    EmptyRanking,
    MissingMetricRow,
    NoVotes,
    PersistenceOutOfRange,
)
from .metrics import Metric, ScoreTable

#: Canonical method order used to break ties deterministically.
DEFAULT_METHOD_REGISTRY: tuple[str, ...] = (
    "CAM",
    "SSCAM",
    "ISCAM",
    "ScCAM",
    "GCAM",
    "GCAM++",
    "SGCAM++",
    "XGCAM",
    "LCAM",
)

#: Ranking source label for the human vote ranking.
HUMAN_SOURCE = "H"


@dataclass(frozen=True)
class VoteTally:
    """Per-image vote counts from the validation experiment."""

    image_id: str
    votes: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "votes", dict(self.votes))
        for method, count in self.votes.items():
            if not isinstance(count, int) or count < 0:
                raise ValueError(f"vote count for {method!r} must be a non-negative int")

    @property
    def total(self) -> int:
        return sum(self.votes.values())


@dataclass(frozen=True)
class Ranking:
    """Ordered method list with tie bookkeeping.

    `ties` holds groups of positions (0-based, contiguous) whose underlying
    scores were equal; the order inside a group is the deterministic
    registry-order tie-break, not a preference.
    """

    items: tuple[str, ...]
    ties: tuple[tuple[int, ...], ...] = ()
    source: str = HUMAN_SOURCE

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "ties", tuple(tuple(g) for g in self.ties))
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranking items must be distinct")
        for group in self.ties:
            if len(group) < 2 or list(group) != list(range(group[0], group[-1] + 1)):
                raise ValueError(f"tie group must be >=2 contiguous positions, got {group}")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def is_human(self) -> bool:
        return self.source == HUMAN_SOURCE

    def tied_positions(self) -> frozenset[int]:
        return frozenset(i for group in self.ties for i in group)


def _registry_index(registry: Sequence[str]):
    order = {m: i for i, m in enumerate(registry)}
    n = len(order)

    def key(method: str):
        return (order.get(method, n), method)

    return key


def _rank_by_score(
    scored: Sequence[tuple[str, float]],
    registry: Sequence[str],
    source: str,
    descending: bool = False,
) -> Ranking:
    by_registry = _registry_index(registry)
    ordered = sorted(
        scored, key=lambda mv: (-mv[1] if descending else mv[1],) + by_registry(mv[0])
    )
    items = tuple(m for m, _ in ordered)
    ties = []
    start = 0
    for i in range(1, len(ordered) + 1):
        if i == len(ordered) or ordered[i][1] != ordered[start][1]:
            if i - start >= 2:
                ties.append(tuple(range(start, i)))
            start = i
    return Ranking(items, tuple(ties), source)


def human_ranking(
    tally: VoteTally, registry: Sequence[str] = DEFAULT_METHOD_REGISTRY
) -> Ranking:
    """Rank methods by vote count, descending; zero-vote methods are excluded."""
    voted = [(m, c) for m, c in tally.votes.items() if c > 0]
    if not voted:
        raise NoVotes(f"image {tally.image_id!r} received no votes")
    return _rank_by_score(voted, registry, HUMAN_SOURCE, descending=True)


def metric_ranking(
    table: ScoreTable, metric: Metric, registry: Optional[Sequence[str]] = None
) -> Ranking:
    """Rank methods by raw distance, ascending (lower is better).

    Methods whose cell is missing (the metric was degenerate for that pair)
    are left out of the ranking.
    """
    if metric not in table.raw:
        raise MissingMetricRow(f"table for {table.image_id!r} has no {metric.name} row")
    scored = [(m, x) for m, x in zip(table.methods, table.raw[metric]) if x is not None]
    if not scored:
        raise MissingMetricRow(
            f"{metric.name} row for {table.image_id!r} has no computable cells"
        )
    order = registry if registry is not None else table.methods
    return _rank_by_score(scored, order, metric.name)


def agreement_at_depth(s: Ranking, t: Ranking, d: int) -> float:
    """Fraction of the top-d prefixes that the two rankings share."""
    if d < 1 or d > min(len(s), len(t)):
        raise DepthOutOfRange(
            f"depth {d} outside [1, {min(len(s), len(t))}] for lists of "
            f"length {len(s)} and {len(t)}"
        )
    return len(set(s.items[:d]) & set(t.items[:d])) / d


def position_weight(p: float, d: int) -> float:
    """Weight (1-p) * p^(d-1) that RBO assigns to ranking position d.

    At p = 0 the first position carries weight 1 (0^0 = 1 convention); at
    p = 1 every individual position's weight vanishes.
    """
    if not 0.0 <= p <= 1.0:
        raise PersistenceOutOfRange(f"persistence must be in [0, 1], got {p}")
    if d < 1:
        raise DepthOutOfRange(f"position must be >= 1, got {d}")
    if p == 0.0:
        return 1.0 if d == 1 else 0.0
    return (1.0 - p) * p ** (d - 1)


def rbo_similarity(s: Ranking, t: Ranking, p: float) -> float:
    """Rank-Biased Overlap similarity truncated at the smaller list's depth."""
    if len(s) == 0 or len(t) == 0:
        raise EmptyRanking("cannot compare an empty ranking")
    if not 0.0 <= p <= 1.0:
        raise PersistenceOutOfRange(f"persistence must be in [0, 1], got {p}")
    depth = min(len(s), len(t))
    seen_s: set[str] = set()
    seen_t: set[str] = set()
    agreements = []
    for d in range(1, depth + 1):
        seen_s.add(s.items[d - 1])
        seen_t.add(t.items[d - 1])
        agreements.append(len(seen_s & seen_t) / d)
    if p == 0.0:
        return agreements[0]
    if p == 1.0:
        return sum(agreements) / depth
    return (1.0 - p) * sum(
        p ** (d - 1) * a_d for d, a_d in enumerate(agreements, start=1)
    )


def rbo_distance(s: Ranking, t: Ranking, p: float) -> float:
    """1 - RBO similarity."""
    return 1.0 - rbo_similarity(s, t, p)


@dataclass(frozen=True)
class RboReport:
    """RBO distances of every metric ranking vs. the human ranking.

    distances: image -> metric -> p -> distance.
    best:      p -> image -> metrics achieving the minimum distance (ties kept).
    counts:    p -> metric -> number of images where the metric is in the best set.
    """

    distances: Mapping[str, Mapping[Metric, Mapping[float, float]]]
    best: Mapping[float, Mapping[str, frozenset[Metric]]]
    counts: Mapping[float, Mapping[Metric, int]]


def best_metric_report(
    per_image_distances: Mapping[str, Mapping[Metric, Mapping[float, float]]],
    p_values: Sequence[float],
    tie_tolerance: float = 1e-12,
) -> RboReport:
    """Aggregate per-image RBO distances into best-metric sets and counts.

    For each p and image, every metric within `tie_tolerance` of the minimum
    distance counts as best, so per-p counts need not sum to the number of
    images.
    """
    distances = {
        image: {metric: dict(by_p) for metric, by_p in by_metric.items()}
        for image, by_metric in per_image_distances.items()
    }
    best: dict[float, dict[str, frozenset[Metric]]] = {}
    counts: dict[float, dict[Metric, int]] = {}
    metrics_seen: list[Metric] = []
    for by_metric in distances.values():
        for metric in by_metric:
            if metric not in metrics_seen:
                metrics_seen.append(metric)

    for p in p_values:
        best[p] = {}
        counts[p] = {metric: 0 for metric in metrics_seen}
        for image, by_metric in distances.items():
            at_p = {m: d[p] for m, d in by_metric.items() if p in d}
            if not at_p:
                continue
            lo = min(at_p.values())
            winners = frozenset(m for m, d in at_p.items() if d - lo <= tie_tolerance)
            best[p][image] = winners
            for m in winners:
                counts[p][m] += 1
    return RboReport(distances, best, counts)
