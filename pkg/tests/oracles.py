"""Reference implementations written independently of the package code.

They favour the plainest possible formulation (loops, dense solvers,
breadth-first searches) over speed.
"""

from collections import deque
import math

import numpy as np


def kernel_loop(F, eps):
    n = len(F)
    w = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            d2 = sum((a - b) ** 2 for a, b in zip(F[i], F[j]))
            w[i, j] = math.exp(-d2 / eps)
    return w


def dense_diffusion_basis(F, eps):
    """Eigen-pairs of the row-stochastic matrix straight from a general eigensolver."""
    w = kernel_loop(F, eps)
    p = w / w.sum(axis=1, keepdims=True)
    lam, vec = np.linalg.eig(p)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam = lam[order].real
    vec = vec[:, order].real
    vec = vec / np.linalg.norm(vec, axis=0)
    for k in range(vec.shape[1]):
        if vec[np.argmax(np.abs(vec[:, k])), k] < 0:
            vec[:, k] = -vec[:, k]
    return p, lam, vec


def dense_background(cube, eps):
    """Raw and [0,255]-normalized first-coordinate image of the cube."""
    cube = np.asarray(cube, dtype=float)
    n = cube.shape[0]
    F = cube.reshape(n, -1)
    _, _, vec = dense_diffusion_basis(F, eps)
    raw = (F.T @ vec[:, 0]).reshape(cube.shape[1:])
    lo, hi = raw.min(), raw.max()
    norm = np.zeros_like(raw) if hi == lo else 255 * (raw - lo) / (hi - lo)
    return raw, norm


def _components(mask, neighbours):
    """Label connected foreground components with a breadth-first search."""
    H, W = mask.shape
    labels = np.zeros((H, W), dtype=int)
    current = 0
    for r in range(H):
        for c in range(W):
            if not mask[r, c] or labels[r, c]:
                continue
            current += 1
            labels[r, c] = current
            queue = deque([(r, c)])
            while queue:
                y, x = queue.popleft()
                for dy, dx in neighbours:
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < H and 0 <= xx < W and mask[yy, xx] and not labels[yy, xx]:
                        labels[yy, xx] = current
                        queue.append((yy, xx))
    return labels, current


EIGHT = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
FOUR = [(-1, 0), (1, 0), (0, -1), (0, 1)]


def label8(mask):
    return _components(np.asarray(mask, bool), EIGHT)


def label4(mask):
    return _components(np.asarray(mask, bool), FOUR)


def fuse_oracle(gray, rgb):
    """Components of (gray | rgb) that contain at least one gray pixel."""
    gray = np.asarray(gray, bool)
    labels, _ = label8(gray | np.asarray(rgb, bool))
    keep = set(labels[gray].tolist())
    return np.isin(labels, list(keep)) & (labels > 0)


def speckle_oracle(mask, min_size):
    labels, count = label4(mask)
    out = np.zeros(labels.shape, bool)
    for k in range(1, count + 1):
        comp = labels == k
        if comp.sum() >= min_size:
            out |= comp
    return out


def scan_right_oracle(h, start, mu):
    slopes = np.abs(np.diff(h))[start:]  # slopes[i] belongs to x = start + i
    steep = np.flatnonzero(slopes >= mu)
    if steep.size == 0:
        return start
    calm = np.flatnonzero(slopes[steep[0]:] < mu)
    return 255 if calm.size == 0 else start + steep[0] + calm[0]


def scan_left_oracle(h, start, mu):
    # mirror the histogram and reuse the rightward rule
    mirrored = np.asarray(h)[::-1]
    return 255 - scan_right_oracle(mirrored, 255 - start, mu)


def frame_diff_loop(cube, th):
    n, H, W = cube.shape
    out = np.zeros(cube.shape, bool)
    for t in range(1, n):
        for r in range(H):
            for c in range(W):
                out[t, r, c] = abs(cube[t, r, c] - cube[t - 1, r, c]) > th
    return out


def mean_threshold_loop(train, test, th):
    n, H, W = test.shape
    out = np.zeros(test.shape, bool)
    for r in range(H):
        for c in range(W):
            mu = sum(train[:, r, c]) / len(train)
            for t in range(n):
                out[t, r, c] = abs(test[t, r, c] - mu) > th
    return out


def temporal_median_loop(cube, history, th):
    n, H, W = cube.shape
    out = np.zeros(cube.shape, bool)
    for t in range(1, n):
        for r in range(H):
            for c in range(W):
                past = sorted(cube[max(0, t - history) : t, r, c])
                med = past[(len(past) - 1) // 2]
                out[t, r, c] = abs(cube[t, r, c] - med) > th
    return out


def eigen_reconstruction_dense(train, test, k):
    """Project onto the top-k eigenvectors of the d x d pixel covariance."""
    n = train.shape[0]
    X = train.reshape(n, -1)
    mean = X.mean(axis=0)
    cov = (X - mean).T @ (X - mean) / n
    lam, vec = np.linalg.eigh(cov)
    basis = vec[:, np.argsort(-lam)[:k]]
    Y = test.reshape(test.shape[0], -1) - mean
    return (Y @ basis @ basis.T + mean).reshape(test.shape)
