"""Binary-mask algebra: DFS fusion, speckle removal, overlap metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from .errors import ShapeError

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
EIGHT_CONNECTED = ndimage.generate_binary_structure(2, 2)


def _same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: mask shapes differ, {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ShapeError(f"{what}: masks must be 2-D, got shape {a.shape}")


@njit(cache=True)
def _dfs_fuse(roots, nodes):
    H, W = roots.shape
    out = np.zeros((H, W), dtype=np.bool_)
    # every pixel is marked when pushed, so the stack never exceeds H*W
    stack = np.empty(H * W, dtype=np.int64)
    for r0 in range(H):
        for c0 in range(W):
            if not roots[r0, c0] or out[r0, c0]:
                continue
            out[r0, c0] = True
            stack[0] = r0 * W + c0
            top = 1
            while top > 0:
                top -= 1
                r = stack[top] // W
                c = stack[top] % W
                for dr in range(-1, 2):
                    rr = r + dr
                    if rr < 0 or rr >= H:
                        continue
                    for dc in range(-1, 2):
                        cc = c + dc
                        if cc < 0 or cc >= W:
                            continue
                        if nodes[rr, cc] and not out[rr, cc]:
                            out[rr, cc] = True
                            stack[top] = rr * W + cc
                            top += 1
    return out


def dfs_fuse(gray_mask: np.ndarray, rgb_mask: np.ndarray) -> np.ndarray:
    """Grow the grayscale detections through the RGB detections.

    Every foreground pixel of ``gray_mask`` that is not yet marked starts a
    depth-first search whose children are the 8-neighbours that are
    foreground in ``rgb_mask``.  The result is every visited pixel, roots
    included, so an isolated root survives and an RGB blob that touches no
    root is discarded.
    """
    gray_mask = np.asarray(gray_mask, dtype=bool)
    rgb_mask = np.asarray(rgb_mask, dtype=bool)
    _same_shape(gray_mask, rgb_mask, "dfs_fuse")
    return _dfs_fuse(np.ascontiguousarray(gray_mask), np.ascontiguousarray(rgb_mask))


def speckle_removal(mask: np.ndarray, min_size: int = 8) -> np.ndarray:
    """Drop 4-connected foreground islands with fewer than ``min_size`` pixels."""
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=FOUR_CONNECTED)
    if count == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_size
    keep[0] = False
    return keep[labels]


def mask_or(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeError(f"mask_or: mask shapes differ, {a.shape} vs {b.shape}")
    return a | b


@dataclass(frozen=True)
class MaskMetrics:
    iou: float
    precision: float
    recall: float


def mask_metrics(predicted: np.ndarray, truth: np.ndarray) -> MaskMetrics:
    """IoU, precision and recall; empty denominators count as perfect scores."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    _same_shape(predicted, truth, "mask_metrics")
    tp = int(np.count_nonzero(predicted & truth))
    n_pred = int(np.count_nonzero(predicted))
    n_true = int(np.count_nonzero(truth))
    union = n_pred + n_true - tp
    return MaskMetrics(
        iou=tp / union if union else 1.0,
        precision=tp / n_pred if n_pred else 1.0,
        recall=tp / n_true if n_true else 1.0,
    )
