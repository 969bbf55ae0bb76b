"""Per-frame segmentation scores and the synthetic comparison run."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .baselines import run_baseline
from .config import BASELINE_METHODS, PipelineConfig
from .errors import ParameterError, ShapeError
from .frames import to_grayscale
from .masks import MaskMetrics, mask_metrics, speckle_removal
from .pipelines import dbsdb_masks, sbsdb_masks
from .synthetic import flicker_benchmark, static_benchmark

METRICS = ("iou", "precision", "recall")
BSDB = "bsdb"
BENCHMARKS = ("static", "flicker")


@dataclass(frozen=True)
class SequenceScore:
    frames: tuple[MaskMetrics, ...]

    @property
    def mean(self) -> MaskMetrics:
        return MaskMetrics(*(float(np.mean([getattr(f, k) for f in self.frames])) for k in METRICS))


def score_sequence(predicted: np.ndarray, truth: np.ndarray) -> SequenceScore:
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise ShapeError(f"predicted masks {predicted.shape} vs truth {truth.shape}")
    if predicted.ndim != 3 or predicted.shape[0] == 0:
        raise ShapeError(f"expected a non-empty (n, H, W) mask stack, got {predicted.shape}")
    return SequenceScore(tuple(mask_metrics(p, t) for p, t in zip(predicted, truth)))


def _fields(m: MaskMetrics) -> str:
    return " ".join(f"{k}={getattr(m, k):.6f}" for k in METRICS)


def format_report(score: SequenceScore, **tags) -> str:
    """Key-value text: one ``frame=`` record per frame, then a ``mean`` record.

    Extra ``tags`` (e.g. ``method=sbsdb``) prefix every record.
    """
    prefix = "".join(f"{k}={v} " for k, v in tags.items())
    lines = [f"{prefix}frame={i} {_fields(m)}" for i, m in enumerate(score.frames)]
    lines.append(f"{prefix}frame=mean {_fields(score.mean)} count={len(score.frames)}")
    return "\n".join(lines) + "\n"


_RECORD = re.compile(r"(\w+)=(\S+)")


def parse_report(text: str) -> list[dict[str, str]]:
    """Inverse of :func:`format_report` (values stay strings)."""
    return [dict(_RECORD.findall(line)) for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class ComparisonRow:
    benchmark: str
    method: str
    score: SequenceScore


def _baselines(test: np.ndarray, train: np.ndarray, config: PipelineConfig,
               methods: Iterable[str]) -> dict[str, np.ndarray]:
    out = {}
    for method in methods:
        masks = run_baseline(method, test, train, config)
        # post-processing for the comparison methods only
        out[method] = np.stack([speckle_removal(m, config.speckle_min_size) for m in masks])
    return out


def run_comparison(seed: int = 0, config: PipelineConfig = PipelineConfig(),
                   train_frames: int = 20, methods: Optional[Iterable[str]] = None) -> list[ComparisonRow]:
    """BSDB and the baselines on both synthetic benchmarks.

    Static benchmark: SBSDB on the 30 test frames; baselines that need
    training data get ``train_frames`` square-free frames of the same scene.
    Flicker benchmark: DBSDB trained on the BGD; baselines see the
    grayscale sequences and train on the grayscale BGD.
    """
    methods = tuple(BASELINE_METHODS if methods is None else methods)
    for m in methods:
        if m not in BASELINE_METHODS:
            raise ParameterError(f"unknown baseline method {m!r}")
    if train_frames < config.eigen_count:
        raise ParameterError(f"train_frames={train_frames} is below eigen_count={config.eigen_count}")
    rows = []

    cube, truth = static_benchmark(seed, frames=30, train_frames=train_frames)
    train, test, test_truth = cube[:train_frames], cube[train_frames:], truth[train_frames:]
    preds = {BSDB: sbsdb_masks(test, config), **_baselines(test, train, config, methods)}
    rows += [ComparisonRow("static", k, score_sequence(v, test_truth)) for k, v in preds.items()]

    bgd, rtd, rtd_truth = flicker_benchmark(seed)
    preds = {BSDB: dbsdb_masks(bgd, rtd, config),
             **_baselines(to_grayscale(rtd), to_grayscale(bgd), config, methods)}
    rows += [ComparisonRow("flicker", k, score_sequence(v, rtd_truth)) for k, v in preds.items()]
    return rows


def comparison_report(rows: list[ComparisonRow]) -> str:
    return "".join(format_report(r.score, benchmark=r.benchmark, method=r.method) for r in rows)


def comparison_table(rows: list[ComparisonRow]) -> str:
    head = f"{'benchmark':<10} {'method':<17} {'iou':>7} {'precision':>9} {'recall':>7}"
    lines = [head, "-" * len(head)]
    for r in rows:
        m = r.score.mean
        lines.append(f"{r.benchmark:<10} {r.method:<17} {m.iou:7.3f} {m.precision:9.3f} {m.recall:7.3f}")
    return "\n".join(lines) + "\n"
