"""Whole-frame or block-parallel execution of the SBSDB and DBSDB pipelines."""

from __future__ import annotations

import numpy as np

from .blocks import make_layout, run_blocked
from .config import PipelineConfig
from .dbsdb import DynamicBackground, run_dbsdb, train_dbsdb
from .errors import ShapeError
from .frames import as_datacube, to_grayscale
from .sbsdb import run_sbsdb
from .spectral import median_epsilon


def layout_for(shape: tuple[int, int], config: PipelineConfig):
    return make_layout(shape[0], shape[1], config.grid_rows, config.grid_cols, config.overlap_px)


def global_epsilon(cube: np.ndarray, config: PipelineConfig) -> float:
    """Median-heuristic epsilon of the first full-frame window."""
    first = np.asarray(cube[: config.m], dtype=np.float64)
    return median_epsilon(first.reshape(first.shape[0], -1))


def sbsdb_masks(cube: np.ndarray, config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """SBSDB masks for a grayscale cube, split into blocks per ``config``."""
    cube = as_datacube(cube, channels=1)
    if config.shared_epsilon and config.epsilon is None:
        config = config.replace(epsilon=global_epsilon(cube, config))
    layout = layout_for(cube.shape[1:], config)
    return run_blocked(cube, layout, lambda sub: run_sbsdb(sub, config)[1], config.workers)


def dbsdb_masks(bgd: np.ndarray, rtd: np.ndarray, config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Train on ``bgd`` and classify ``rtd``, each block independently."""
    bgd = as_datacube(bgd, channels=3)
    rtd = as_datacube(rtd, channels=3)
    if config.shared_epsilon and config.epsilon is None:
        config = config.replace(epsilon=global_epsilon(to_grayscale(rtd), config))

    def pipeline(b, r):
        return run_dbsdb(r, train_dbsdb(b, config), config).masks

    return run_blocked((bgd, rtd), layout_for(rtd.shape[1:3], config), pipeline, config.workers)


def classify_with_model(rtd: np.ndarray, model: DynamicBackground,
                        config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """DBSDB classification against a full-frame model, blockwise per ``config``.

    Each block reads the matching window of the trained backgrounds.
    """
    rtd = as_datacube(rtd, channels=3)
    if rtd.shape[1:3] != model.shape:
        raise ShapeError(f"RTD frames are {rtd.shape[1:3]}, model is {model.shape}")
    layout = layout_for(rtd.shape[1:3], config)
    windows = {(b.row, b.col): b.slices for b in layout.blocks}
    # a one-frame "cube" of pixel coordinates tells each block where it sits
    coords = np.stack(np.mgrid[0 : rtd.shape[1], 0 : rtd.shape[2]], axis=-1)[None]

    def pipeline(r, where):
        rs, cs = windows[tuple(where[0, 0, 0])]
        return run_dbsdb(r, model.crop(rs, cs), config).masks

    return run_blocked((rtd, coords), layout, pipeline, config.workers)
