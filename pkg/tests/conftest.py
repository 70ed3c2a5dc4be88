"""Shared synthetic-experiment fixture used by pipeline, CLI, and acceptance tests."""

from pathlib import Path

import numpy as np
import pytest

from heatalign import Heatmap
from heatalign.config import ExperimentConfig
from heatalign.fileio import write_heatmap_csv, write_heatmap_pgm

CANVAS = 16
IMAGES = ("img_a", "img_b", "img_c")
METHODS = ("M1", "M2", "M3", "M4")
N_ANNOTATORS = 5
N_VOTERS = 10


def build_experiment(root: Path, seed: int = 7) -> dict:
    """Write a 3-image, 4-method, 5-annotator, 10-voter experiment to disk."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    rows = ["image_id,annotator_id,x_min,y_min,x_max,y_max"]
    for image_id in IMAGES:
        for a in range(N_ANNOTATORS):
            x0 = int(rng.integers(0, 8))
            y0 = int(rng.integers(0, 8))
            w = int(rng.integers(2, 8))
            h = int(rng.integers(2, 8))
            rows.append(
                f"{image_id},ann{a},{x0},{y0},{min(x0 + w, CANVAS)},{min(y0 + h, CANVAS)}"
            )
    (root / "annotations.csv").write_text("\n".join(rows) + "\n")

    heatmap_files: dict[tuple[str, str], Path] = {}
    for image_id in IMAGES:
        image_dir = root / "heatmaps" / image_id
        image_dir.mkdir(parents=True, exist_ok=True)
        for i, method in enumerate(METHODS):
            values = rng.random((CANVAS, CANVAS))
            values[4:10, 4:10] += 2.0 * (i + 1) / len(METHODS)
            heatmap = Heatmap(values / values.max())
            # mix both on-disk formats
            if i % 2 == 0:
                target = image_dir / f"{method}.csv"
                write_heatmap_csv(heatmap, target)
            else:
                target = image_dir / f"{method}.pgm"
                write_heatmap_pgm(heatmap, target)
            heatmap_files[(image_id, method)] = target

    rows = ["image_id,participant_id,method"]
    for image_id in IMAGES:
        for v in range(N_VOTERS):
            rows.append(f"{image_id},p{v},{METHODS[int(rng.integers(0, len(METHODS)))]}")
    (root / "votes.csv").write_text("\n".join(rows) + "\n")

    rows = ["image_id,x_min,y_min,x_max,y_max"]
    for image_id in IMAGES:
        rows.append(f"{image_id},4,4,10,10")
    (root / "truth.csv").write_text("\n".join(rows) + "\n")

    config_path = root / "config.txt"
    config_path.write_text(
        f"annotations = {root / 'annotations.csv'}\n"
        f"heatmaps = {root / 'heatmaps'}\n"
        f"votes = {root / 'votes.csv'}\n"
        f"truth_boxes = {root / 'truth.csv'}\n"
        f"canvas = {CANVAS}x{CANVAS}\n"
        f"methods = {','.join(METHODS)}\n"
        f"out = {root / 'out'}\n"
    )
    config = ExperimentConfig(
        annotations=root / "annotations.csv",
        heatmap_dir=root / "heatmaps",
        votes=root / "votes.csv",
        truth_boxes=root / "truth.csv",
        out_dir=root / "out",
        canvas=(CANVAS, CANVAS),
        methods=METHODS,
    )
    return {
        "root": root,
        "config": config,
        "config_path": config_path,
        "heatmap_files": heatmap_files,
    }


@pytest.fixture
def experiment(tmp_path):
    return build_experiment(tmp_path / "experiment")
