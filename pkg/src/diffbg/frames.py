"""Datacubes, grayscale conversion, histograms and slope-scan thresholds.

A datacube is a float64 array of shape ``(n, H, W)`` (grayscale) or
``(n, H, W, 3)`` (RGB) with pixel values in ``[0, 255]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, ShapeError

LUMA = np.array([0.299, 0.587, 0.114])
NUM_BINS = 256
SMOOTH_WINDOW = 5


def as_datacube(frames, channels: int | None = None) -> np.ndarray:
    cube = np.asarray(frames, dtype=np.float64)
    if cube.ndim == 3:
        ch = 1
    elif cube.ndim == 4 and cube.shape[-1] == 3:
        ch = 3
    else:
        raise ShapeError(f"datacube must be (n, H, W) or (n, H, W, 3), got shape {cube.shape}")
    if cube.shape[0] < 1:
        raise ParameterError("datacube has no frames")
    if channels is not None and ch != channels:
        kind = "grayscale" if channels == 1 else "RGB"
        raise ParameterError(f"expected a {kind} datacube, got shape {cube.shape}")
    if not np.all(np.isfinite(cube)):
        raise ParameterError("datacube contains non-finite pixel values")
    return cube


def to_grayscale(cube: np.ndarray) -> np.ndarray:
    """Luma conversion ``0.299 R + 0.587 G + 0.114 B`` of an RGB cube or frame."""
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim not in (3, 4) or cube.shape[-1] != 3:
        raise ParameterError(f"to_grayscale needs a 3-channel input, got shape {cube.shape}")
    return cube @ LUMA


def normalize_0_255(frame: np.ndarray) -> np.ndarray:
    """Affine map of ``[min, max]`` onto ``[0, 255]``; all zeros if constant."""
    frame = np.asarray(frame, dtype=np.float64)
    lo, hi = frame.min(), frame.max()
    if hi == lo:
        return np.zeros_like(frame)
    return (frame - lo) / (hi - lo) * 255.0


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray
    smoothed: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.smoothed))


def smooth_histogram(bins: np.ndarray) -> np.ndarray:
    """Centered moving average of width 5 with half-sample reflection at the ends.

    The reflection keeps the total mass unchanged.
    """
    bins = np.asarray(bins, dtype=np.float64)
    half = SMOOTH_WINDOW // 2
    padded = np.pad(bins, half, mode="symmetric")
    total = sum(padded[k : k + bins.size] for k in range(SMOOTH_WINDOW))
    return total / SMOOTH_WINDOW


def build_histogram(frame: np.ndarray) -> Histogram:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size == 0:
        raise ParameterError("cannot build a histogram of an empty frame")
    lo, hi = frame.min(), frame.max()
    if not (lo >= 0 and hi <= 255):
        raise ParameterError(f"histogram input must lie in [0, 255], got range [{lo}, {hi}]")
    bins = np.bincount(np.rint(frame).astype(np.int64).ravel(), minlength=NUM_BINS)
    bins = bins.astype(np.float64)
    return Histogram(bins, smooth_histogram(bins))


# Slope scans.  The slope stepping outward from x is |h[x+1] - h[x]| going
# right and |h[x] - h[x-1]| going left.  A threshold is the first position
# where the slope is below mu *after* the scan has crossed a steep
# (>= mu) stretch; a scan that never meets a steep slope stops at the peak.


def _scan_right(h: np.ndarray, start: int, mu: float) -> int:
    steep = False
    for x in range(start, NUM_BINS - 1):
        if abs(h[x + 1] - h[x]) >= mu:
            steep = True
        elif steep:
            return x
    return NUM_BINS - 1 if steep else start


def _scan_left(h: np.ndarray, start: int, mu: float) -> int:
    steep = False
    for y in range(start, 0, -1):
        if abs(h[y] - h[y - 1]) >= mu:
            steep = True
        elif steep:
            return y
    return 0 if steep else start


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")


def threshold_gray(hist: Histogram, mu: float) -> int:
    """Gray level where the histogram's descent right of its peak levels off."""
    _check_mu(mu)
    return _scan_right(hist.smoothed, hist.argmax, mu)


def threshold_rgb_two_sided(hist: Histogram, mu: float) -> tuple[int, int]:
    """``(left, right)`` gray levels bracketing the histogram's central mode."""
    _check_mu(mu)
    peak = hist.argmax
    return _scan_left(hist.smoothed, peak, mu), _scan_right(hist.smoothed, peak, mu)


def apply_gray_threshold(frame: np.ndarray, th: float) -> np.ndarray:
    return np.asarray(frame) >= th


def apply_rgb_threshold(frame_rgb: np.ndarray, thresholds: Sequence[tuple[float, float]]) -> np.ndarray:
    """Foreground where any channel falls outside the open interval ``(left, right)``."""
    frame_rgb = np.asarray(frame_rgb)
    if frame_rgb.ndim != 3 or frame_rgb.shape[-1] != 3 or len(thresholds) != 3:
        raise ShapeError("apply_rgb_threshold needs an (H, W, 3) frame and three threshold pairs")
    mask = np.zeros(frame_rgb.shape[:2], dtype=bool)
    for c, (left, right) in enumerate(thresholds):
        v = frame_rgb[..., c]
        mask |= (v <= left) | (v >= right)
    return mask


def gray_mask(frame: np.ndarray, mu: float) -> tuple[np.ndarray, int]:
    """Histogram, threshold and binarize one residual frame."""
    th = threshold_gray(build_histogram(frame), mu)
    return apply_gray_threshold(frame, th), th


def rgb_mask(frame_rgb: np.ndarray, mu: float) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Two-sided threshold per channel of an ``(H, W, 3)`` frame in [0, 255], OR-combined."""
    ths = [threshold_rgb_two_sided(build_histogram(frame_rgb[..., c]), mu) for c in range(3)]
    return apply_rgb_threshold(frame_rgb, ths), ths
