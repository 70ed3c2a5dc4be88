"""Experiment configuration and the `key = value` config-file format.

Config files are plain text, one `key = value` per line, `#` comments
allowed.  Command-line flags override file values; defaults fill the rest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from .boxes import DEFAULT_THRESHOLDS
from .errors import PersistenceOutOfRange, ValidationError
from .metrics import ALL_METRICS, Metric
from .ranking import DEFAULT_METHOD_REGISTRY

DEFAULT_CANVAS: tuple[int, int] = (224, 224)
DEFAULT_P_VALUES: tuple[float, ...] = (0.0, 0.5, 0.8, 0.9, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    annotations: Optional[Path] = None
    heatmap_dir: Optional[Path] = None
    votes: Optional[Path] = None
    truth_boxes: Optional[Path] = None
    out_dir: Path = Path("heatalign-out")
    canvas: tuple[int, int] = DEFAULT_CANVAS
    methods: tuple[str, ...] = DEFAULT_METHOD_REGISTRY
    metrics: tuple[Metric, ...] = ALL_METRICS
    p_values: tuple[float, ...] = DEFAULT_P_VALUES
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        width, height = self.canvas
        if width <= 0 or height <= 0:
            raise ValidationError(f"canvas dimensions must be positive, got {self.canvas}")
        if not self.methods:
            raise ValidationError("method registry must not be empty")
        if len(set(self.methods)) != len(self.methods):
            raise ValidationError("method registry contains duplicates")
        if not self.metrics:
            raise ValidationError("metric set must not be empty")
        if len(set(self.metrics)) != len(self.metrics):
            raise ValidationError("metric set contains duplicates")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise PersistenceOutOfRange(f"p value {p} outside [0, 1]")
        if not self.thresholds:
            raise ValidationError("threshold grid must not be empty")
        for t in self.thresholds:
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"threshold {t} outside [0, 1]")
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValidationError("thresholds must be strictly increasing")

    def hash(self) -> str:
        """Stable short digest of the experiment parameters.

        The output directory is excluded: it determines where results land,
        not what they are.
        """
        parts = []
        for f in fields(self):
            if f.name == "out_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                rendered = ",".join(
                    v.name if isinstance(v, Metric) else repr(v) if isinstance(v, float) else str(v)
                    for v in value
                )
            else:
                rendered = str(value)
            parts.append(f"{f.name}={rendered}")
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()[:12]


def parse_canvas(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValidationError(f"canvas must be WIDTHxHEIGHT, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"canvas must be WIDTHxHEIGHT with integers, got {text!r}") from None


def parse_metric(name: str) -> Metric:
    try:
        return Metric[name.strip()]
    except KeyError:
        valid = ", ".join(m.name for m in Metric)
        raise ValidationError(f"unknown metric {name.strip()!r}; valid: {valid}") from None


def _parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip() != "")
    except ValueError:
        raise ValidationError(f"{what} must be comma-separated numbers, got {text!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines into a raw string mapping."""
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_PATH_KEYS = {
    "annotations": "annotations",
    "heatmaps": "heatmap_dir",
    "votes": "votes",
    "truth_boxes": "truth_boxes",
    "out": "out_dir",
}


def config_from_mapping(values: Mapping[str, str], source: str = "<config>") -> ExperimentConfig:
    """Build an ExperimentConfig from raw string settings."""
    kwargs: dict = {}
    for key, value in values.items():
        if key in _PATH_KEYS:
            kwargs[_PATH_KEYS[key]] = Path(value)
        elif key == "canvas":
            kwargs["canvas"] = parse_canvas(value)
        elif key == "methods":
            kwargs["methods"] = tuple(m.strip() for m in value.split(",") if m.strip())
        elif key == "metrics":
            kwargs["metrics"] = tuple(parse_metric(m) for m in value.split(",") if m.strip())
        elif key == "p_values":
            kwargs["p_values"] = _parse_float_list(value, "p_values")
        elif key == "thresholds":
            kwargs["thresholds"] = _parse_float_list(value, "thresholds")
        elif key == "seed":
            pass  # reserved; the pipeline is deterministic
        else:
            raise ValidationError(f"{source}: unknown config key {key!r}")
    return ExperimentConfig(**kwargs)


def load_config(path: Path) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text(), str(path)), str(path))
