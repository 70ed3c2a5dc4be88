"""End-to-end orchestration: ingest inputs, evaluate, emit report files.

The pipeline is deterministic: images are processed in sorted order, method
and metric orders come from the config, and all emitted files use fixed
float formatting.  Per-image problems (unreadable heatmap files, degenerate
metrics) are recorded in the run manifest and never abort a batch; defects
in the shared CSV inputs (annotations, votes, ground-truth boxes) are
validation errors and fail fast.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from . import __version__
from .boxes import ThresholdSweep, sweep_thresholds
from .config import ExperimentConfig
from .errors import HeatalignError, IoFailure, MissingMetricRow, DimensionMismatch
from .fileio import (
    read_annotations_csv,
    read_heatmap,
    read_truth_boxes_csv,
    read_votes_csv,
    write_best_counts_csv,
    write_heatmap_csv,
    write_heatmap_pgm,
    write_ppm,
    write_rankings_csv,
    write_rbo_csv,
    write_score_tables_csv,
    write_sweeps_csv,
)
from .heatmaps import (
    AnnotationSet,
    BoundingBox,
    Heatmap,
    aggregate_annotations,
    unit_normalize,
)
from .metrics import Metric, ScoreTable, compute_score_table
from .ranking import (
    HUMAN_SOURCE,
    Ranking,
    RboReport,
    VoteTally,
    best_metric_report,
    human_ranking,
    metric_ranking,
    rbo_distance,
)

log = logging.getLogger(__name__)

# value 0 -> light yellow, value 1 -> dark red (importance colormap)
_COLOR_LOW = np.array([255.0, 255.0, 178.0])
_COLOR_HIGH = np.array([189.0, 0.0, 38.0])

REPORT_FILES = (
    "scores.csv",
    "rankings.csv",
    "rbo.csv",
    "rbo_best_counts.csv",
    "threshold_sweeps.csv",
    "summary.md",
)


@dataclass
class ImageStatus:
    status: str  # "processed" | "skipped"
    reason: str = ""
    notes: tuple[str, ...] = ()
    cell_errors: tuple[tuple[str, str, str], ...] = ()  # (metric, method, error)

    def add_note(self, note: str) -> None:
        if note not in self.notes:
            self.notes = self.notes + (note,)


@dataclass
class RunManifest:
    """Per-image outcomes plus run metadata; timings are not serialized."""

    version: str
    config_hash: str
    images: dict[str, ImageStatus] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "config_hash": self.config_hash,
            "images": {
                image_id: {
                    "status": st.status,
                    "reason": st.reason,
                    "notes": list(st.notes),
                    "cell_errors": [list(e) for e in st.cell_errors],
                }
                for image_id, st in sorted(self.images.items())
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass
class ExperimentState:
    """Everything ingested from disk, keyed by image id."""

    config: ExperimentConfig
    annotations: dict[str, AnnotationSet]
    heatmaps: dict[str, dict[str, Heatmap]]
    votes: dict[str, VoteTally]
    truth_boxes: dict[str, BoundingBox]
    manifest: RunManifest

    def processed_images(self) -> list[str]:
        return [i for i, st in sorted(self.manifest.images.items()) if st.status == "processed"]


@dataclass
class EvaluationResult:
    score_tables: dict[str, ScoreTable]
    rankings: dict[str, dict[str, Ranking]]
    rbo: RboReport
    sweeps: dict[str, dict[str, ThresholdSweep]]
    manifest: RunManifest


def _load_image_heatmaps(
    image_dir: Path, config: ExperimentConfig, status: ImageStatus
) -> dict[str, Heatmap]:
    """Read one image's explanation heatmaps; defective files drop their method."""
    width, height = config.canvas
    found: dict[str, Heatmap] = {}
    for file in sorted(image_dir.iterdir()):
        if file.suffix.lower() not in (".csv", ".pgm"):
            continue
        method = file.stem
        if method not in config.methods:
            status.add_note(f"ignored {file.name}: unknown method {method!r}")
            continue
        if method in found:
            status.add_note(f"ignored {file.name}: duplicate heatmap for {method!r}")
            continue
        try:
            h = read_heatmap(file)
            if (h.width, h.height) != (width, height):
                raise DimensionMismatch(
                    f"{file}: heatmap is {h.width}x{h.height}, canvas is {width}x{height}"
                )
            found[method] = unit_normalize(h)
        except (HeatalignError, OSError) as exc:
            status.add_note(f"dropped method {method!r}: {exc}")
    return {m: found[m] for m in config.methods if m in found}


def ingest(config: ExperimentConfig) -> ExperimentState:
    """Load all configured inputs and mark each image processed or skipped.

    An image is processed when it has annotations and at least two valid
    explanation heatmaps; missing votes or ground-truth boxes only restrict
    which outputs it appears in.
    """
    started = time.perf_counter()
    manifest = RunManifest(version=__version__, config_hash=config.hash())

    annotations = (
        read_annotations_csv(config.annotations, config.canvas) if config.annotations else {}
    )
    votes = read_votes_csv(config.votes, config.methods) if config.votes else {}
    truth_boxes = read_truth_boxes_csv(config.truth_boxes) if config.truth_boxes else {}
    for image_id, box in truth_boxes.items():
        if not box.fits_canvas(*config.canvas):
            raise DimensionMismatch(
                f"ground-truth box for {image_id!r} exceeds canvas "
                f"{config.canvas[0]}x{config.canvas[1]}"
            )

    statuses: dict[str, ImageStatus] = {}
    heatmaps: dict[str, dict[str, Heatmap]] = {}
    if config.heatmap_dir:
        heatmap_root = Path(config.heatmap_dir)
        if not heatmap_root.is_dir():
            raise IoFailure(f"heatmap directory not found: {heatmap_root}")
        for image_dir in sorted(heatmap_root.iterdir()):
            if not image_dir.is_dir():
                continue
            status = statuses.setdefault(image_dir.name, ImageStatus("processed"))
            heatmaps[image_dir.name] = _load_image_heatmaps(image_dir, config, status)

    universe = sorted(
        set(annotations) | set(heatmaps) | set(votes) | set(truth_boxes) | set(statuses)
    )
    for image_id in universe:
        status = statuses.setdefault(image_id, ImageStatus("processed"))
        n_heatmaps = len(heatmaps.get(image_id, {}))
        if image_id not in annotations:
            status.status, status.reason = "skipped", "no annotations"
        elif n_heatmaps == 0:
            status.status, status.reason = "skipped", "no explanation heatmaps"
        elif n_heatmaps < 2:
            status.status, status.reason = "skipped", "fewer than 2 explanation heatmaps"
        if status.status == "processed":
            if image_id not in votes:
                status.add_note("no votes")
            if image_id not in truth_boxes:
                status.add_note("no ground-truth box")
        manifest.images[image_id] = status

    manifest.timings["ingest"] = time.perf_counter() - started
    log.info("ingest: %d images (%d processable) in %.3fs",
             len(universe), sum(1 for s in manifest.images.values() if s.status == "processed"),
             manifest.timings["ingest"])
    return ExperimentState(config, annotations, heatmaps, votes, truth_boxes, manifest)


def compute_annotation_heatmaps(state: ExperimentState) -> dict[str, Heatmap]:
    return {
        image_id: aggregate_annotations(state.annotations[image_id])
        for image_id in sorted(state.annotations)
    }


def compute_scores(state: ExperimentState) -> dict[str, ScoreTable]:
    """Score tables for every processable image; failures demote to skipped."""
    tables: dict[str, ScoreTable] = {}
    for image_id in state.processed_images():
        status = state.manifest.images[image_id]
        try:
            annotation = aggregate_annotations(state.annotations[image_id])
            table = compute_score_table(
                annotation, state.heatmaps[image_id], state.config.metrics, image_id=image_id
            )
        except HeatalignError as exc:
            status.status, status.reason = "skipped", f"scoring failed: {exc}"
            continue
        status.cell_errors = tuple(
            (metric.name, method, message)
            for (metric, method), message in table.errors.items()
        )
        tables[image_id] = table
    return tables


def compute_rankings(
    state: ExperimentState, tables: Mapping[str, ScoreTable]
) -> dict[str, dict[str, Ranking]]:
    """Human ranking (when votes exist) followed by one ranking per metric."""
    rankings: dict[str, dict[str, Ranking]] = {}
    for image_id in sorted(tables):
        per_image: dict[str, Ranking] = {}
        tally = state.votes.get(image_id)
        if tally is not None and tally.total > 0:
            per_image[HUMAN_SOURCE] = human_ranking(tally, state.config.methods)
        table = tables[image_id]
        for metric in state.config.metrics:
            try:
                per_image[metric.name] = metric_ranking(table, metric, state.config.methods)
            except MissingMetricRow:
                state.manifest.images[image_id].add_note(f"no {metric.name} ranking")
        rankings[image_id] = per_image
    return rankings


def compute_rbo(
    state: ExperimentState, rankings: Mapping[str, Mapping[str, Ranking]]
) -> RboReport:
    """RBO distances of each metric ranking against the human ranking."""
    distances: dict[str, dict[Metric, dict[float, float]]] = {}
    for image_id in sorted(rankings):
        per_image = rankings[image_id]
        human = per_image.get(HUMAN_SOURCE)
        if human is None:
            continue
        by_metric: dict[Metric, dict[float, float]] = {}
        for metric in state.config.metrics:
            ranking = per_image.get(metric.name)
            if ranking is None:
                continue
            by_metric[metric] = {
                p: rbo_distance(human, ranking, p) for p in state.config.p_values
            }
        if by_metric:
            distances[image_id] = by_metric
    return best_metric_report(distances, state.config.p_values)


def compute_sweeps(state: ExperimentState) -> dict[str, dict[str, ThresholdSweep]]:
    """Threshold/IoU baseline for every image with a ground-truth box."""
    sweeps: dict[str, dict[str, ThresholdSweep]] = {}
    for image_id in sorted(state.heatmaps):
        truth = state.truth_boxes.get(image_id)
        if truth is None or not state.heatmaps[image_id]:
            continue
        sweeps[image_id] = {
            method: sweep_thresholds(h, truth, state.config.thresholds)
            for method, h in state.heatmaps[image_id].items()
        }
    return sweeps


def run_evaluation(state: ExperimentState) -> EvaluationResult:
    """Run scoring, ranking, RBO, and threshold sweeps over ingested state."""
    manifest = state.manifest

    started = time.perf_counter()
    tables = compute_scores(state)
    manifest.timings["score"] = time.perf_counter() - started

    started = time.perf_counter()
    rankings = compute_rankings(state, tables)
    manifest.timings["rank"] = time.perf_counter() - started

    started = time.perf_counter()
    rbo = compute_rbo(state, rankings)
    manifest.timings["rbo"] = time.perf_counter() - started

    started = time.perf_counter()
    sweeps = compute_sweeps(state)
    manifest.timings["sweep"] = time.perf_counter() - started

    for stage in ("score", "rank", "rbo", "sweep"):
        log.info("%s: %.3fs", stage, manifest.timings[stage])
    return EvaluationResult(tables, rankings, rbo, sweeps, manifest)


def render_overlay(image_base: Optional[Heatmap], h: Heatmap, out: Path) -> None:
    """Render a heatmap to binary PPM: 0 maps to light yellow, 1 to dark red.

    With a base map, the colormapped heatmap is alpha-blended (0.5) over the
    base rendered as grayscale.
    """
    if float(h.values.max()) > 1.0:
        raise ValueError("render requires a unit-normalized heatmap")
    v = h.values[..., None]
    rgb = (1.0 - v) * _COLOR_LOW + v * _COLOR_HIGH
    if image_base is not None:
        if (image_base.width, image_base.height) != (h.width, h.height):
            raise DimensionMismatch(
                f"base is {image_base.width}x{image_base.height}, "
                f"heatmap is {h.width}x{h.height}"
            )
        gray = np.clip(image_base.values, 0.0, 1.0)[..., None] * 255.0
        rgb = 0.5 * gray + 0.5 * rgb
    try:
        write_ppm(np.rint(rgb).astype(np.uint8), out)
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc


def _round4(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.4f}"


def _summary_markdown(state: ExperimentState, result: EvaluationResult) -> str:
    """Human-readable report with 4-decimal rounding and per-row best in bold."""
    config = state.config
    manifest = result.manifest
    lines: list[str] = []
    lines.append("# heatalign report")
    lines.append("")
    lines.append(f"- tool version: {manifest.version}")
    lines.append(f"- config hash: {manifest.config_hash}")
    n_processed = sum(1 for s in manifest.images.values() if s.status == "processed")
    lines.append(f"- images: {n_processed} processed of {len(manifest.images)}")
    lines.append("")

    lines.append("## Images")
    lines.append("")
    lines.append("| image | status | details |")
    lines.append("| --- | --- | --- |")
    for image_id, st in sorted(manifest.images.items()):
        details = st.reason if st.status == "skipped" else "; ".join(st.notes)
        lines.append(f"| {image_id} | {st.status} | {details} |")
    lines.append("")

    if result.score_tables:
        lines.append("## Distance scores (normalized; lower is better)")
        for image_id in sorted(result.score_tables):
            table = result.score_tables[image_id]
            lines.append("")
            lines.append(f"### {image_id}")
            lines.append("")
            lines.append("| metric | " + " | ".join(table.methods) + " |")
            lines.append("| --- |" + " --- |" * len(table.methods))
            for metric in table.metrics:
                best = set(table.best_methods(metric))
                cells = []
                for method, value in zip(table.methods, table.normalized[metric]):
                    text = _round4(value)
                    cells.append(f"**{text}**" if method in best else text)
                lines.append(f"| {metric.name} | " + " | ".join(cells) + " |")
        lines.append("")

    if result.rankings:
        rbo_p = 1.0 if 1.0 in config.p_values else max(config.p_values)
        depth = len(config.methods)
        lines.append(f"## Rankings (RBO distance vs. human at p={rbo_p:g})")
        for image_id in sorted(result.rankings):
            per_image = result.rankings[image_id]
            if not per_image:
                continue
            lines.append("")
            lines.append(f"### {image_id}")
            lines.append("")
            header = [f"{d}" for d in range(1, depth + 1)]
            lines.append("| source | " + " | ".join(header) + " | RBO |")
            lines.append("| --- |" + " --- |" * (depth + 1))
            distances = result.rbo.distances.get(image_id, {})
            for source, ranking in per_image.items():
                tied = ranking.tied_positions()
                row = [
                    ranking.items[i] + ("*" if i in tied else "") if i < len(ranking) else "-"
                    for i in range(depth)
                ]
                if source == HUMAN_SOURCE:
                    rbo_text = _round4(0.0)
                else:
                    by_p = distances.get(Metric[source], {})
                    rbo_text = _round4(by_p.get(rbo_p))
                lines.append(f"| {source} | " + " | ".join(row) + f" | {rbo_text} |")
            lines.append("")
            lines.append("`*` position inside a tie group (registry order within the group).")
        lines.append("")

    if any(result.rbo.counts.values()):
        lines.append("## Images where each metric achieved the best RBO distance")
        lines.append("")
        p_values = list(result.rbo.counts)
        metrics = list(result.rbo.counts[p_values[0]]) if p_values else []
        lines.append("| metric | " + " | ".join(f"p={p:g}" for p in p_values) + " |")
        lines.append("| --- |" + " --- |" * len(p_values))
        col_best = {
            p: max(result.rbo.counts[p].values(), default=0) for p in p_values
        }
        for metric in metrics:
            cells = []
            for p in p_values:
                count = result.rbo.counts[p].get(metric, 0)
                text = str(count)
                cells.append(f"**{text}**" if count == col_best[p] and count > 0 else text)
            lines.append(f"| {metric.name} | " + " | ".join(cells) + " |")
        lines.append("")

    if result.sweeps:
        lines.append("## Threshold sweep (best IoU vs. ground-truth box)")
        for image_id in sorted(result.sweeps):
            lines.append("")
            lines.append(f"### {image_id}")
            lines.append("")
            lines.append("| method | best threshold | IoU |")
            lines.append("| --- | --- | --- |")
            for method, sweep in result.sweeps[image_id].items():
                t_text = "-" if sweep.best_threshold is None else f"{sweep.best_threshold:g}"
                lines.append(f"| {method} | {t_text} | {_round4(sweep.best_iou)} |")
        lines.append("")

    return "\n".join(lines) + "\n"


def emit_report(state: ExperimentState, result: EvaluationResult, out_dir: Path) -> list[Path]:
    """Write the five machine CSVs, the summary, and the run manifest."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_score_tables_csv(result.score_tables, out_dir / "scores.csv")
        write_rankings_csv(result.rankings, out_dir / "rankings.csv")
        write_rbo_csv(result.rbo, out_dir / "rbo.csv")
        write_best_counts_csv(result.rbo.counts, out_dir / "rbo_best_counts.csv")
        write_sweeps_csv(result.sweeps, out_dir / "threshold_sweeps.csv")
        (out_dir / "summary.md").write_text(_summary_markdown(state, result))
        (out_dir / "manifest.json").write_text(result.manifest.to_json())
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_dir}: {exc}") from exc
    return [out_dir / name for name in REPORT_FILES] + [out_dir / "manifest.json"]


def emit_annotation_heatmaps(
    state: ExperimentState, out_dir: Path, file_format: str = "csv"
) -> list[Path]:
    """Write aggregated annotation heatmaps, one file per image."""
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for image_id, h in compute_annotation_heatmaps(state).items():
            target = out_dir / f"{image_id}.{file_format}"
            if file_format == "csv":
                write_heatmap_csv(h, target)
            else:
                write_heatmap_pgm(h, target)
            written.append(target)
    except OSError as exc:
        raise IoFailure(f"cannot write heatmaps to {out_dir}: {exc}") from exc
    return written


def emit_renders(state: ExperimentState, out_dir: Path) -> list[Path]:
    """Render annotation and explanation heatmaps for every image to PPM."""
    out_dir = Path(out_dir)
    written = []
    annotation_maps = compute_annotation_heatmaps(state)
    image_ids = sorted(set(annotation_maps) | set(state.heatmaps))
    try:
        for image_id in image_ids:
            image_dir = out_dir / image_id
            image_dir.mkdir(parents=True, exist_ok=True)
            if image_id in annotation_maps:
                target = image_dir / "annotation.ppm"
                render_overlay(None, annotation_maps[image_id], target)
                written.append(target)
            for method, h in state.heatmaps.get(image_id, {}).items():
                target = image_dir / f"{method}.ppm"
                render_overlay(None, h, target)
                written.append(target)
    except OSError as exc:
        raise IoFailure(f"cannot write renders to {out_dir}: {exc}") from exc
    return written
