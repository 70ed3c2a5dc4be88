"""CSV and portable-pixmap readers/writers for every pipeline artifact.

Machine CSVs serialize floats with repr() (shortest round-trip form) so a
written file re-ingests to the exact same values; display rounding happens
only in the human-readable summary.  Heatmaps travel either as CSV grids
(lossless) or 16-bit big-endian PGM (quantized to 1/65535).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .boxes import SweepPoint, ThresholdSweep
from .errors import (
    BoxOutOfCanvas,
    MalformedCsv,
    MalformedImage,
    UnknownMethod,
)
from .heatmaps import AnnotationSet, BoundingBox, Heatmap
from .metrics import Metric, ScoreTable
from .ranking import Ranking, RboReport, VoteTally

PGM_MAXVAL = 65535

ANNOTATION_HEADER = ["image_id", "annotator_id", "x_min", "y_min", "x_max", "y_max"]
VOTES_HEADER = ["image_id", "participant_id", "method"]
TRUTH_HEADER = ["image_id", "x_min", "y_min", "x_max", "y_max"]
SCORES_HEADER = ["image_id", "metric", "method", "raw", "normalized"]
RANKINGS_HEADER = ["image_id", "source", "position", "method", "tied"]
RBO_HEADER = ["image_id", "metric", "p", "rbo_distance"]
BEST_COUNTS_HEADER = ["metric", "p", "best_count"]
SWEEP_HEADER = ["image_id", "method", "threshold", "x_min", "y_min", "x_max", "y_max", "iou"]


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _open_rows(path: Path, header: Sequence[str]) -> list[tuple[int, list[str]]]:
    """Read a CSV, validate the header, and return (line_number, row) pairs."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != list(header):
        raise MalformedCsv(f"{path}:1: expected header {','.join(header)}", line=1)
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"{path}:{line}: expected {len(header)} fields, got {len(row)}", line=line)
        out.append((line, row))
    return out


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _int_field(path: Path, line: int, name: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedCsv(f"{path}:{line}: {name} must be an integer, got {value!r}", line=line) from None


def _float_field(path: Path, line: int, name: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise MalformedCsv(f"{path}:{line}: {name} must be a number, got {value!r}", line=line) from None


# -- crowd annotations -------------------------------------------------------

def read_annotations_csv(path: Path, canvas: tuple[int, int]) -> dict[str, AnnotationSet]:
    """Load annotator boxes grouped per image; boxes must fit the canvas."""
    width, height = canvas
    grouped: dict[str, list[tuple[str, BoundingBox]]] = {}
    for line, row in _open_rows(path, ANNOTATION_HEADER):
        image_id, annotator_id = row[0], row[1]
        coords = [_int_field(path, line, name, v)
                  for name, v in zip(ANNOTATION_HEADER[2:], row[2:])]
        try:
            box = BoundingBox(*coords)
        except ValueError as exc:
            raise MalformedCsv(f"{path}:{line}: {exc}", line=line) from None
        if not box.fits_canvas(width, height):
            raise BoxOutOfCanvas(f"{path}:{line}: {box} exceeds canvas {width}x{height}")
        grouped.setdefault(image_id, []).append((annotator_id, box))
    return {
        image_id: AnnotationSet(image_id, tuple(boxes), canvas)
        for image_id, boxes in grouped.items()
    }


def write_annotations_csv(annotations: Mapping[str, AnnotationSet], path: Path) -> None:
    rows = []
    for image_id in sorted(annotations):
        for annotator_id, b in annotations[image_id].boxes:
            rows.append([image_id, annotator_id, b.x_min, b.y_min, b.x_max, b.y_max])
    _write_rows(path, ANNOTATION_HEADER, rows)


# -- votes -------------------------------------------------------------------

def read_votes_csv(path: Path, registry: Sequence[str]) -> dict[str, VoteTally]:
    """Load validation-experiment votes; every method must be in the registry."""
    allowed = set(registry)
    counts: dict[str, dict[str, int]] = {}
    for line, row in _open_rows(path, VOTES_HEADER):
        image_id, _participant, method = row
        if method not in allowed:
            raise UnknownMethod(f"{path}:{line}: method {method!r} not in registry")
        per_image = counts.setdefault(image_id, {})
        per_image[method] = per_image.get(method, 0) + 1
    return {image_id: VoteTally(image_id, votes) for image_id, votes in counts.items()}


# -- ground-truth boxes --------------------------------------------------------

def read_truth_boxes_csv(path: Path) -> dict[str, BoundingBox]:
    boxes: dict[str, BoundingBox] = {}
    for line, row in _open_rows(path, TRUTH_HEADER):
        image_id = row[0]
        if image_id in boxes:
            raise MalformedCsv(f"{path}:{line}: duplicate ground-truth box for {image_id!r}", line=line)
        coords = [_int_field(path, line, name, v) for name, v in zip(TRUTH_HEADER[1:], row[1:])]
        try:
            boxes[image_id] = BoundingBox(*coords)
        except ValueError as exc:
            raise MalformedCsv(f"{path}:{line}: {exc}", line=line) from None
    return boxes


# -- heatmap files -------------------------------------------------------------

def read_heatmap_csv(path: Path) -> Heatmap:
    """Read a heatmap stored as a CSV grid of decimal floats."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if row]
    if not rows:
        raise MalformedCsv(f"{path}: empty heatmap grid")
    width = len(rows[0])
    grid = np.empty((len(rows), width), dtype=np.float64)
    for line, row in enumerate(rows, start=1):
        if len(row) != width:
            raise MalformedCsv(f"{path}:{line}: ragged row ({len(row)} vs {width} columns)", line=line)
        for j, cell in enumerate(row):
            grid[line - 1, j] = _float_field(path, line, "value", cell)
    return Heatmap(grid)


def write_heatmap_csv(h: Heatmap, path: Path) -> None:
    _write_rows_plain(path, ([repr(float(x)) for x in row] for row in h.values))


def _write_rows_plain(path: Path, rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def _parse_pnm_header(data: bytes, path: Path, tokens_needed: int = 4) -> tuple[list[bytes], int]:
    """Collect header tokens, skipping whitespace and # comments."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < tokens_needed:
        if i >= len(data):
            raise MalformedImage(f"{path}: truncated header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
                i += 1
            tokens.append(data[start:i])
    if i >= len(data) or not data[i:i + 1].isspace():
        raise MalformedImage(f"{path}: missing whitespace after header")
    return tokens, i + 1


def read_heatmap_pgm(path: Path) -> Heatmap:
    """Read a binary 16-bit big-endian PGM (P5, maxval 65535) heatmap."""
    data = Path(path).read_bytes()
    tokens, offset = _parse_pnm_header(data, path)
    if tokens[0] != b"P5":
        raise MalformedImage(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedImage(f"{path}: non-numeric header fields") from None
    if maxval != PGM_MAXVAL:
        raise MalformedImage(f"{path}: maxval must be {PGM_MAXVAL}, got {maxval}")
    if width <= 0 or height <= 0:
        raise MalformedImage(f"{path}: invalid dimensions {width}x{height}")
    payload = data[offset:]
    if len(payload) != 2 * width * height:
        raise MalformedImage(
            f"{path}: expected {2 * width * height} payload bytes, got {len(payload)}"
        )
    codes = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return Heatmap(codes.astype(np.float64) / PGM_MAXVAL)


def write_heatmap_pgm(h: Heatmap, path: Path) -> None:
    """Write a unit-range heatmap as binary PGM; values quantize to 1/65535."""
    if float(h.values.max()) > 1.0:
        raise ValueError("PGM encoding requires values in [0, 1]; unit-normalize first")
    codes = np.rint(h.values * PGM_MAXVAL).astype(">u2")
    header = f"P5\n{h.width} {h.height}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + codes.tobytes())


def read_heatmap(path: Path) -> Heatmap:
    """Dispatch on suffix: .csv grid or .pgm image."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return read_heatmap_csv(Path(path))
    if suffix == ".pgm":
        return read_heatmap_pgm(Path(path))
    raise MalformedImage(f"{path}: unsupported heatmap format {suffix!r} (use .csv or .pgm)")


def write_ppm(rgb: np.ndarray, path: Path) -> None:
    """Write an HxWx3 uint8 array as binary PPM (P6, maxval 255)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError(f"expected HxWx3 uint8 array, got {rgb.shape} {rgb.dtype}")
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + rgb.tobytes())


def read_ppm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, offset = _parse_pnm_header(data, path)
    if tokens[0] != b"P6":
        raise MalformedImage(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise MalformedImage(f"{path}: maxval must be 255, got {maxval}")
    payload = data[offset:]
    if len(payload) != 3 * width * height:
        raise MalformedImage(f"{path}: truncated pixel data")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


# -- score tables ---------------------------------------------------------------

def write_score_tables_csv(tables: Mapping[str, ScoreTable], path: Path) -> None:
    rows = []
    for image_id in sorted(tables):
        table = tables[image_id]
        for metric in table.metrics:
            raw_row = table.raw[metric]
            norm_row = table.normalized[metric]
            for method, raw, norm in zip(table.methods, raw_row, norm_row):
                rows.append([image_id, metric.name, method, _fmt(raw), _fmt(norm)])
    _write_rows(path, SCORES_HEADER, rows)


def read_score_tables_csv(path: Path) -> dict[str, ScoreTable]:
    per_image: dict[str, dict[Metric, list[tuple[str, Optional[float], Optional[float]]]]] = {}
    for line, row in _open_rows(path, SCORES_HEADER):
        image_id, metric_name, method, raw_s, norm_s = row
        try:
            metric = Metric[metric_name]
        except KeyError:
            raise MalformedCsv(f"{path}:{line}: unknown metric {metric_name!r}", line=line) from None
        raw = None if raw_s == "" else _float_field(path, line, "raw", raw_s)
        norm = None if norm_s == "" else _float_field(path, line, "normalized", norm_s)
        per_image.setdefault(image_id, {}).setdefault(metric, []).append((method, raw, norm))

    tables = {}
    for image_id, by_metric in per_image.items():
        first = next(iter(by_metric.values()))
        methods = tuple(m for m, _, _ in first)
        raw = {}
        normalized = {}
        for metric, cells in by_metric.items():
            if tuple(m for m, _, _ in cells) != methods:
                raise MalformedCsv(
                    f"{path}: inconsistent method columns for image {image_id!r}"
                )
            raw[metric] = tuple(c[1] for c in cells)
            normalized[metric] = tuple(c[2] for c in cells)
        tables[image_id] = ScoreTable(image_id, methods, raw, normalized)
    return tables


# -- rankings --------------------------------------------------------------------

def write_rankings_csv(rankings: Mapping[str, Mapping[str, Ranking]], path: Path) -> None:
    """Rows per position; `tied` is a per-ranking tie-group id, 0 when untied."""
    rows = []
    for image_id in sorted(rankings):
        for source, ranking in rankings[image_id].items():
            group_of = {}
            for gid, group in enumerate(ranking.ties, start=1):
                for idx in group:
                    group_of[idx] = gid
            for idx, method in enumerate(ranking.items):
                rows.append([image_id, source, idx + 1, method, group_of.get(idx, 0)])
    _write_rows(path, RANKINGS_HEADER, rows)


def read_rankings_csv(path: Path) -> dict[str, dict[str, Ranking]]:
    grouped: dict[tuple[str, str], list[tuple[int, str, int]]] = {}
    for line, row in _open_rows(path, RANKINGS_HEADER):
        image_id, source, pos_s, method, tied_s = row
        pos = _int_field(path, line, "position", pos_s)
        tied = _int_field(path, line, "tied", tied_s)
        grouped.setdefault((image_id, source), []).append((pos, method, tied))

    out: dict[str, dict[str, Ranking]] = {}
    for (image_id, source), entries in grouped.items():
        entries.sort()
        if [pos for pos, _, _ in entries] != list(range(1, len(entries) + 1)):
            raise MalformedCsv(f"{path}: non-contiguous positions for {image_id!r}/{source!r}")
        items = tuple(method for _, method, _ in entries)
        groups: dict[int, list[int]] = {}
        for idx, (_, _, tied) in enumerate(entries):
            if tied > 0:
                groups.setdefault(tied, []).append(idx)
        ties = tuple(tuple(groups[g]) for g in sorted(groups))
        out.setdefault(image_id, {})[source] = Ranking(items, ties, source)
    return out


# -- RBO reports -------------------------------------------------------------------

def write_rbo_csv(report: RboReport, path: Path) -> None:
    rows = []
    for image_id in sorted(report.distances):
        for metric, by_p in report.distances[image_id].items():
            for p, dist in by_p.items():
                rows.append([image_id, metric.name, repr(float(p)), repr(float(dist))])
    _write_rows(path, RBO_HEADER, rows)


def read_rbo_csv(path: Path) -> dict[str, dict[Metric, dict[float, float]]]:
    out: dict[str, dict[Metric, dict[float, float]]] = {}
    for line, row in _open_rows(path, RBO_HEADER):
        image_id, metric_name, p_s, dist_s = row
        try:
            metric = Metric[metric_name]
        except KeyError:
            raise MalformedCsv(f"{path}:{line}: unknown metric {metric_name!r}", line=line) from None
        p = _float_field(path, line, "p", p_s)
        dist = _float_field(path, line, "rbo_distance", dist_s)
        out.setdefault(image_id, {}).setdefault(metric, {})[p] = dist
    return out


def write_best_counts_csv(counts: Mapping[float, Mapping[Metric, int]], path: Path) -> None:
    rows = []
    p_values = list(counts)
    metrics = list(counts[p_values[0]]) if p_values else []
    for metric in metrics:
        for p in p_values:
            rows.append([metric.name, repr(float(p)), counts[p].get(metric, 0)])
    _write_rows(path, BEST_COUNTS_HEADER, rows)


def read_best_counts_csv(path: Path) -> dict[float, dict[Metric, int]]:
    out: dict[float, dict[Metric, int]] = {}
    for line, row in _open_rows(path, BEST_COUNTS_HEADER):
        metric_name, p_s, count_s = row
        try:
            metric = Metric[metric_name]
        except KeyError:
            raise MalformedCsv(f"{path}:{line}: unknown metric {metric_name!r}", line=line) from None
        p = _float_field(path, line, "p", p_s)
        out.setdefault(p, {})[metric] = _int_field(path, line, "best_count", count_s)
    return out


# -- threshold sweeps -----------------------------------------------------------------

def write_sweeps_csv(sweeps: Mapping[str, Mapping[str, ThresholdSweep]], path: Path) -> None:
    rows = []
    for image_id in sorted(sweeps):
        for method, sweep in sweeps[image_id].items():
            for point in sweep.results:
                if point.box is None:
                    rows.append([image_id, method, repr(point.threshold), "", "", "", "", ""])
                else:
                    b = point.box
                    rows.append([
                        image_id, method, repr(point.threshold),
                        b.x_min, b.y_min, b.x_max, b.y_max, repr(point.iou),
                    ])
    _write_rows(path, SWEEP_HEADER, rows)


def read_sweeps_csv(path: Path) -> dict[str, dict[str, ThresholdSweep]]:
    grouped: dict[tuple[str, str], list[SweepPoint]] = {}
    for line, row in _open_rows(path, SWEEP_HEADER):
        image_id, method, t_s = row[0], row[1], row[2]
        t = _float_field(path, line, "threshold", t_s)
        if row[3] == "":
            point = SweepPoint(t, None, None)
        else:
            coords = [_int_field(path, line, name, v)
                      for name, v in zip(SWEEP_HEADER[3:7], row[3:7])]
            point = SweepPoint(t, BoundingBox(*coords), _float_field(path, line, "iou", row[7]))
        grouped.setdefault((image_id, method), []).append(point)

    out: dict[str, dict[str, ThresholdSweep]] = {}
    for (image_id, method), points in grouped.items():
        best_t, best_iou = None, None
        for pt in points:
            if pt.iou is not None and (best_iou is None or pt.iou > best_iou):
                best_t, best_iou = pt.threshold, pt.iou
        out.setdefault(image_id, {})[method] = ThresholdSweep(
            tuple(pt.threshold for pt in points), tuple(points), best_t, best_iou
        )
    return out
