"""Command-line interface.

Subcommands cover each pipeline stage (aggregate, score, rank, rbo, sweep,
render) plus `report`, which runs everything.  Exit codes: 0 success,
1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, config_from_mapping, parse_config_text
from .errors import HeatalignError, IoFailure, ValidationError
from .fileio import (
    read_rankings_csv,
    write_best_counts_csv,
    write_rankings_csv,
    write_rbo_csv,
    write_score_tables_csv,
    write_sweeps_csv,
)
from .pipeline import (
    compute_rankings,
    compute_rbo,
    compute_scores,
    compute_sweeps,
    emit_annotation_heatmaps,
    emit_renders,
    emit_report,
    ingest,
    run_evaluation,
)
from .ranking import HUMAN_SOURCE, best_metric_report, rbo_distance
from .metrics import Metric


class _UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad usage, not argparse's default 2
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatalign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"heatalign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="config file (key = value lines)")
        p.add_argument("--annotations", type=Path, help="annotation boxes CSV")
        p.add_argument("--heatmaps", type=Path, help="explanation heatmap directory")
        p.add_argument("--votes", type=Path, help="validation-experiment votes CSV")
        p.add_argument("--truth-boxes", type=Path, help="ground-truth boxes CSV")
        p.add_argument("--canvas", help="canvas size as WIDTHxHEIGHT (default 224x224)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--methods", help="comma-separated method registry")
        p.add_argument("--metrics", help="comma-separated metric acronyms")
        p.add_argument("--thresholds", help="comma-separated threshold grid")
        p.add_argument("--seed", type=int, help="reserved; the pipeline is deterministic")
        p.add_argument("-v", "--verbose", action="store_true", help="log stage timings")

    p = sub.add_parser("aggregate", help="build annotation heatmaps from annotator boxes")
    add_common(p)
    p.add_argument("--format", choices=("csv", "pgm"), default="csv",
                   help="annotation heatmap file format (default csv)")

    add_common(sub.add_parser("score", help="compute metric score tables"))
    add_common(sub.add_parser("rank", help="build human and metric rankings"))

    p = sub.add_parser("rbo", help="compare metric rankings to the human ranking")
    add_common(p)
    p.add_argument("--p", action="append", type=float, dest="p_values",
                   help="persistence value; repeatable (default 0.0,0.5,0.8,0.9,1.0)")
    p.add_argument("--rankings", type=Path,
                   help="use a rankings CSV directly instead of recomputing")

    add_common(sub.add_parser("sweep", help="threshold-to-box IoU baseline"))
    add_common(sub.add_parser("report", help="run the full pipeline and emit all files"))
    add_common(sub.add_parser("render", help="render heatmaps to PPM images"))
    return parser


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, str] = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise IoFailure(f"cannot read config {args.config}: {exc}") from exc
        values.update(parse_config_text(text, str(args.config)))
    overrides = {
        "annotations": args.annotations,
        "heatmaps": args.heatmaps,
        "votes": args.votes,
        "truth_boxes": args.truth_boxes,
        "canvas": args.canvas,
        "out": args.out,
        "methods": args.methods,
        "metrics": args.metrics,
        "thresholds": args.thresholds,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = str(value)
    p_values = getattr(args, "p_values", None)
    if p_values:
        values["p_values"] = ",".join(repr(p) for p in p_values)
    return config_from_mapping(values, source="<command line>")


def _rbo_from_rankings_file(config: ExperimentConfig, path: Path, out_dir: Path) -> None:
    """Score pre-built rankings (one human row group per image) with RBO."""
    rankings = read_rankings_csv(path)
    distances: dict[str, dict[Metric, dict[float, float]]] = {}
    for image_id in sorted(rankings):
        per_image = rankings[image_id]
        human = per_image.get(HUMAN_SOURCE)
        if human is None:
            continue
        by_metric: dict[Metric, dict[float, float]] = {}
        for source, ranking in per_image.items():
            if source == HUMAN_SOURCE:
                continue
            try:
                metric = Metric[source]
            except KeyError:
                raise ValidationError(f"{path}: ranking source {source!r} is not a metric") from None
            by_metric[metric] = {p: rbo_distance(human, ranking, p) for p in config.p_values}
        if by_metric:
            distances[image_id] = by_metric
    report = best_metric_report(distances, config.p_values)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rbo_csv(report, out_dir / "rbo.csv")
    write_best_counts_csv(report.counts, out_dir / "rbo_best_counts.csv")


_REQUIRED_INPUTS = {
    "aggregate": ("annotations",),
    "score": ("annotations", "heatmap_dir"),
    "rank": ("annotations", "heatmap_dir"),
    "rbo": ("annotations", "heatmap_dir", "votes"),
    "sweep": ("heatmap_dir", "truth_boxes"),
    "report": (),
    "render": (),
}

_INPUT_FLAGS = {
    "annotations": "--annotations",
    "heatmap_dir": "--heatmaps",
    "votes": "--votes",
    "truth_boxes": "--truth-boxes",
}


def _check_required_inputs(command: str, config: ExperimentConfig) -> None:
    missing = [
        _INPUT_FLAGS[name]
        for name in _REQUIRED_INPUTS[command]
        if getattr(config, name) is None
    ]
    if missing:
        raise ValidationError(f"{command} requires {', '.join(missing)}")


def _run(args: argparse.Namespace) -> None:
    config = _build_config(args)
    out_dir = Path(config.out_dir)

    if args.command == "rbo" and args.rankings is not None:
        _rbo_from_rankings_file(config, args.rankings, out_dir)
        return

    _check_required_inputs(args.command, config)
    state = ingest(config)
    if args.command == "aggregate":
        emit_annotation_heatmaps(state, out_dir / "annotation_heatmaps", args.format)
    elif args.command == "score":
        tables = compute_scores(state)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_score_tables_csv(tables, out_dir / "scores.csv")
    elif args.command == "rank":
        rankings = compute_rankings(state, compute_scores(state))
        out_dir.mkdir(parents=True, exist_ok=True)
        write_rankings_csv(rankings, out_dir / "rankings.csv")
    elif args.command == "rbo":
        rankings = compute_rankings(state, compute_scores(state))
        report = compute_rbo(state, rankings)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_rbo_csv(report, out_dir / "rbo.csv")
        write_best_counts_csv(report.counts, out_dir / "rbo_best_counts.csv")
    elif args.command == "sweep":
        sweeps = compute_sweeps(state)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_sweeps_csv(sweeps, out_dir / "threshold_sweeps.csv")
    elif args.command == "report":
        result = run_evaluation(state)
        emit_report(state, result, out_dir)
    elif args.command == "render":
        emit_renders(state, out_dir / "renders")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _run(args)
    except (IoFailure, OSError) as exc:
        print(f"heatalign: I/O error: {exc}", file=sys.stderr)
        return 2
    except HeatalignError as exc:
        print(f"heatalign: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
