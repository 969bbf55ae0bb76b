"""On-line static-background subtraction over a forward-looking sliding window."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .config import PipelineConfig
from .errors import ParameterError, ShapeError
from .frames import as_datacube, gray_mask
from .spectral import (
    BackgroundFrame,
    KernelMatrix,
    affinity,
    background_from_kernel,
    gaussian_kernel,
    median_epsilon,
    squared_distances,
)


class SlidingWindow:
    """The last ``m`` frame-vectors plus their Gaussian kernel at a frozen epsilon.

    ``slide`` drops the oldest frame and appends a new one, touching only
    one row and column of the kernel.
    """

    def __init__(self, frames: np.ndarray, epsilon: float):
        frames = np.array(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 2:
            raise ParameterError(f"a window needs at least 2 frame-vectors, got shape {frames.shape}")
        self.frames = frames
        self.epsilon = float(epsilon)
        self._w = gaussian_kernel(frames, self.epsilon).w

    @property
    def m(self) -> int:
        return self.frames.shape[0]

    @property
    def kernel(self) -> KernelMatrix:
        return KernelMatrix(self._w.copy(), self.epsilon)

    def slide(self, incoming: np.ndarray) -> "SlidingWindow":
        incoming = np.asarray(incoming, dtype=np.float64).ravel()
        if incoming.size != self.frames.shape[1]:
            raise ShapeError(
                f"incoming frame has {incoming.size} pixels, window frames have {self.frames.shape[1]}"
            )
        frames = np.empty_like(self.frames)
        frames[:-1] = self.frames[1:]
        frames[-1] = incoming
        w = np.empty_like(self._w)
        w[:-1, :-1] = self._w[1:, 1:]
        row = affinity(squared_distances(frames, incoming), self.epsilon)
        w[-1, :] = row
        w[:, -1] = row
        self.frames, self._w = frames, w
        return self


@dataclass
class BackgroundSequence:
    backgrounds: list[BackgroundFrame] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.backgrounds)

    def __getitem__(self, i: int) -> BackgroundFrame:
        return self.backgrounds[i]

    def normalized(self) -> np.ndarray:
        return np.stack([b.normalized for b in self.backgrounds])


@dataclass(frozen=True, eq=False)
class FrameResult:
    index: int
    background: BackgroundFrame
    residual: np.ndarray
    mask: Optional[np.ndarray]
    threshold: Optional[int]


def iter_sbsdb(
    frames: Iterable[np.ndarray],
    config: PipelineConfig = PipelineConfig(),
    *,
    threshold: bool = True,
) -> Iterator[FrameResult]:
    """Stream grayscale frames in, per-frame results out, in input order.

    Frame ``i`` is explained by the window ``(s_i, ..., s_{i+m-1})``, so
    results lag the input by ``m - 1`` frames; the last ``m - 1`` frames
    reuse the final window's background when the stream ends.  Epsilon is
    fixed by the first window and never re-estimated.
    """
    m = config.m
    pending: list[np.ndarray] = []
    window: Optional[SlidingWindow] = None
    shape: Optional[tuple[int, int]] = None
    count = 0
    background: Optional[BackgroundFrame] = None

    def emit(frame: np.ndarray, idx: int) -> FrameResult:
        residual = np.maximum(frame - background.normalized, 0.0)
        if not threshold:
            return FrameResult(idx, background, residual, None, None)
        mask, th = gray_mask(residual, config.mu)
        return FrameResult(idx, background, residual, mask, th)

    for frame in frames:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 2:
            raise ShapeError(f"SBSDB expects grayscale (H, W) frames, got shape {frame.shape}")
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise ShapeError(f"frame {count} has shape {frame.shape}, expected {shape}")
        pending.append(frame)
        count += 1
        if window is None:
            if len(pending) < m:
                continue
            F = np.stack(pending).reshape(m, -1)
            eps = config.epsilon if config.epsilon is not None else median_epsilon(F)
            window = SlidingWindow(F, eps)
        else:
            window.slide(frame)
        background = background_from_kernel(window.frames, window.kernel, shape, config.eta)
        yield emit(pending.pop(0), count - m)

    if window is None:
        raise ParameterError(f"SBSDB needs at least m={m} frames, got n={count}")
    for k, frame in enumerate(pending):
        yield emit(frame, count - len(pending) + k)


def run_sbsdb(cube: np.ndarray, config: PipelineConfig = PipelineConfig()
              ) -> tuple[BackgroundSequence, list[np.ndarray]]:
    cube = _check_cube(cube, config)
    seq, masks = BackgroundSequence(), []
    for r in iter_sbsdb(cube, config):
        seq.backgrounds.append(r.background)
        masks.append(r.mask)
    return seq, masks


def run_sbsdb_no_threshold(cube: np.ndarray, config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Clamped residual cube ``max(s_i - bg_i, 0)``, no thresholding."""
    cube = _check_cube(cube, config)
    return np.stack([r.residual for r in iter_sbsdb(cube, config, threshold=False)])


def _check_cube(cube: np.ndarray, config: PipelineConfig) -> np.ndarray:
    cube = as_datacube(cube, channels=1)
    if cube.shape[0] < config.m:
        raise ParameterError(f"SBSDB needs at least m={config.m} frames, got n={cube.shape[0]}")
    return cube
