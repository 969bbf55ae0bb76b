"""Classical background-subtraction baselines used for comparison runs.

All functions take single-channel cubes ``(n, H, W)`` and return a boolean
``(n, H, W)`` mask array.
"""

from __future__ import annotations

import numpy as np

from .config import PipelineConfig
from .errors import ParameterError, ShapeError
from .frames import as_datacube


def _check_threshold(threshold: float) -> None:
    if not threshold >= 0:
        raise ParameterError(f"threshold must be non-negative, got {threshold}")


def frame_diff(cube: np.ndarray, threshold: float) -> np.ndarray:
    """``|s_t - s_{t-1}| > threshold``; the first frame has an empty mask."""
    cube = as_datacube(cube, channels=1)
    _check_threshold(threshold)
    if cube.shape[0] < 2:
        raise ParameterError(f"frame_diff needs at least 2 frames, got {cube.shape[0]}")
    masks = np.zeros(cube.shape, dtype=bool)
    masks[1:] = np.abs(np.diff(cube, axis=0)) > threshold
    return masks


def mean_threshold(train_cube: np.ndarray, test_cube: np.ndarray, threshold: float) -> np.ndarray:
    """Foreground where a pixel is farther than ``threshold`` from its training mean."""
    train = as_datacube(train_cube, channels=1)
    test = as_datacube(test_cube, channels=1)
    _check_threshold(threshold)
    if train.shape[1:] != test.shape[1:]:
        raise ShapeError(f"training frames {train.shape[1:]} differ from test frames {test.shape[1:]}")
    return np.abs(test - train.mean(axis=0)) > threshold


def temporal_median(cube: np.ndarray, history: int, threshold: float) -> np.ndarray:
    """Compare each frame with the lower median of the (up to) ``history`` frames before it.

    Frame 0 has no history and gets an empty mask.
    """
    cube = as_datacube(cube, channels=1)
    _check_threshold(threshold)
    if history < 1:
        raise ParameterError(f"history must be >= 1, got {history}")
    masks = np.zeros(cube.shape, dtype=bool)
    for t in range(1, cube.shape[0]):
        past = np.sort(cube[max(0, t - history) : t], axis=0)
        median = past[(past.shape[0] - 1) // 2]
        masks[t] = np.abs(cube[t] - median) > threshold
    return masks


class EigenBackground:
    """Mean plus the leading principal directions of the training frames."""

    def __init__(self, train_cube: np.ndarray, eigen_count: int):
        train = as_datacube(train_cube, channels=1)
        n = train.shape[0]
        if not 1 <= eigen_count <= n:
            raise ParameterError(f"eigen_count must be in [1, {n}] for {n} training frames, got {eigen_count}")
        self.shape = train.shape[1:]
        X = train.reshape(n, -1)
        self.mean = X.mean(axis=0)
        Xc = X - self.mean
        # eigenvectors of the d x d covariance via the n x n Gram matrix
        lam, u = np.linalg.eigh(Xc @ Xc.T)
        order = np.argsort(-lam, kind="stable")[:eigen_count]
        lam, u = lam[order], u[:, order]
        scale = np.sqrt(np.clip(lam, 0.0, None))
        # directions with no training variance carry no information; drop them
        keep = scale > scale.max() * 1e-10
        self.basis = (Xc.T @ u[:, keep]) / scale[keep]
        self.eigenvalues = lam / n

    def reconstruct(self, frames: np.ndarray) -> np.ndarray:
        frames = np.asarray(frames, dtype=np.float64)
        X = frames.reshape(frames.shape[0], -1) - self.mean
        recon = (X @ self.basis) @ self.basis.T + self.mean
        return recon.reshape(frames.shape)


def eigen_background(train_cube: np.ndarray, test_cube: np.ndarray, eigen_count: int,
                     threshold: float) -> np.ndarray:
    _check_threshold(threshold)
    model = EigenBackground(train_cube, eigen_count)
    test = as_datacube(test_cube, channels=1)
    if test.shape[1:] != model.shape:
        raise ShapeError(f"training frames {model.shape} differ from test frames {test.shape[1:]}")
    return np.abs(test - model.reconstruct(test)) > threshold


def run_baseline(method: str, test_cube: np.ndarray, train_cube: np.ndarray | None = None,
                 config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    th = config.baseline_threshold
    if method == "frame_diff":
        return frame_diff(test_cube, th)
    if method == "temporal_median":
        return temporal_median(test_cube, config.history, th)
    if train_cube is None:
        raise ParameterError(f"{method} needs a training sequence")
    if method == "mean_threshold":
        return mean_threshold(train_cube, test_cube, th)
    if method == "eigen_background":
        return eigen_background(train_cube, test_cube, config.eigen_count, th)
    raise ParameterError(f"unknown baseline method {method!r}")
