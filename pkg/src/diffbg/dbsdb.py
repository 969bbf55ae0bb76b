"""Dynamic-background subtraction: iterative off-line training and on-line classification.

Training runs the single-window background extractor repeatedly on the
background-only sequence (BGD), peeling one background layer per pass and
summing the raw layers.  Classification combines a grayscale detector
(few false positives, incomplete objects) with a two-sided RGB detector
(complete objects, many false positives) by growing the former through
the latter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .config import PipelineConfig
from .errors import ParameterError, SequenceIOError, ShapeError
from .frames import as_datacube, gray_mask, normalize_0_255, rgb_mask, to_grayscale
from .masks import dfs_fuse
from .sbsdb import run_sbsdb_no_threshold
from .spectral import BackgroundFrame, extract_background

MODEL_MAGIC = b"DBGM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class TrainingState:
    residual_cube: np.ndarray
    accumulated: np.ndarray
    stop_fraction: float
    max_iterations: int
    iteration: int = 0
    raw_backgrounds: list[np.ndarray] = field(default_factory=list)
    nonpositive_fractions: list[float] = field(default_factory=list)

    @property
    def normalized(self) -> np.ndarray:
        return normalize_0_255(self.accumulated)

    @property
    def background(self) -> BackgroundFrame:
        return BackgroundFrame(self.accumulated, self.normalized)


def train_dynamic_background(
    bgd: np.ndarray,
    rho: float = 0.9,
    max_iterations: int = 10,
    *,
    clamp: bool = True,
    epsilon: float | None = None,
    eta: int = 1,
) -> TrainingState:
    """Iteratively extract and subtract backgrounds from a foreground-free cube.

    Each pass treats the whole current cube as one window, subtracts the
    normalized background from every frame (clamping negatives to zero
    when ``clamp``) and adds the raw background to the accumulator.  The
    loop ends once a fraction ``rho`` of the residual pixels is <= 0, or
    after ``max_iterations`` passes.
    """
    cube = np.asarray(bgd, dtype=np.float64)
    if cube.ndim != 3 or cube.shape[0] == 0:
        raise ParameterError(f"training needs a non-empty single-channel cube (n, H, W), got shape {cube.shape}")
    if cube.shape[0] < 2:
        raise ParameterError(f"training needs at least 2 frames, got {cube.shape[0]}")
    if not 0 < rho <= 1:
        raise ParameterError(f"rho must lie in (0, 1], got {rho}")
    if max_iterations < 1:
        raise ParameterError(f"max_iterations must be >= 1, got {max_iterations}")

    state = TrainingState(cube.copy(), np.zeros(cube.shape[1:]), rho, max_iterations)
    while state.iteration < max_iterations:
        bg = extract_background(state.residual_cube, epsilon=epsilon, eta=eta)
        residual = state.residual_cube - bg.normalized
        if clamp:
            residual = np.maximum(residual, 0.0)
        state.residual_cube = residual
        state.accumulated = state.accumulated + bg.raw
        state.raw_backgrounds.append(bg.raw)
        state.iteration += 1
        frac = float(np.count_nonzero(residual <= 0)) / residual.size
        state.nonpositive_fractions.append(frac)
        if frac >= rho:
            break
    return state


@dataclass(frozen=True, eq=False)
class DynamicBackground:
    gray: BackgroundFrame
    rgb: tuple[BackgroundFrame, BackgroundFrame, BackgroundFrame]

    @property
    def shape(self) -> tuple[int, int]:
        return self.gray.normalized.shape

    def rgb_stack(self) -> np.ndarray:
        return np.stack([b.normalized for b in self.rgb], axis=-1)

    def crop(self, rows: slice, cols: slice) -> "DynamicBackground":
        """Sub-window of the model; the stored normalization is kept as is."""
        def cut(b: BackgroundFrame) -> BackgroundFrame:
            return BackgroundFrame(b.raw[rows, cols].copy(), b.normalized[rows, cols].copy())
        return DynamicBackground(cut(self.gray), tuple(cut(b) for b in self.rgb))


def train_gray(bgd: np.ndarray, config: PipelineConfig = PipelineConfig()) -> TrainingState:
    """Grayscale training: window residuals of the BGD, then iterative capture on them."""
    gray = to_grayscale(as_datacube(bgd, channels=3))
    residuals = run_sbsdb_no_threshold(gray, config)
    return train_dynamic_background(
        residuals, config.rho, config.max_iterations, clamp=True, epsilon=config.epsilon, eta=config.eta
    )


def train_rgb(bgd: np.ndarray, config: PipelineConfig = PipelineConfig()) -> list[TrainingState]:
    """Per-channel iterative capture on the raw RGB BGD, without clamping."""
    bgd = as_datacube(bgd, channels=3)
    return [
        train_dynamic_background(
            bgd[..., c], config.rho, config.max_iterations, clamp=False, epsilon=config.epsilon, eta=config.eta
        )
        for c in range(3)
    ]


def train_dbsdb(bgd: np.ndarray, config: PipelineConfig = PipelineConfig()) -> DynamicBackground:
    gray = train_gray(bgd, config)
    rgb = train_rgb(bgd, config)
    return DynamicBackground(gray.background, tuple(s.background for s in rgb))


@dataclass(frozen=True, eq=False)
class DBSDBResult:
    masks: list[np.ndarray]
    gray_masks: list[np.ndarray]
    rgb_masks: list[np.ndarray]


def classify_gray(rtd: np.ndarray, model: DynamicBackground, config: PipelineConfig = PipelineConfig()
                  ) -> list[np.ndarray]:
    gray = to_grayscale(as_datacube(rtd, channels=3))
    residual = gray
    for _ in range(config.passes):
        residual = run_sbsdb_no_threshold(residual, config)
    masks = []
    for frame in residual:
        diff = np.maximum(frame - model.gray.normalized, 0.0)
        masks.append(gray_mask(diff, config.mu)[0])
    return masks


def classify_rgb(rtd: np.ndarray, model: DynamicBackground, config: PipelineConfig = PipelineConfig()
                 ) -> list[np.ndarray]:
    rtd = as_datacube(rtd, channels=3)
    bg = model.rgb_stack()
    masks = []
    for frame in rtd:
        diff = frame - bg
        normalized = np.stack([normalize_0_255(diff[..., c]) for c in range(3)], axis=-1)
        masks.append(rgb_mask(normalized, config.mu)[0])
    return masks


def run_dbsdb(rtd: np.ndarray, model: DynamicBackground, config: PipelineConfig = PipelineConfig()) -> DBSDBResult:
    rtd = as_datacube(rtd, channels=3)
    if rtd.shape[1:3] != model.shape:
        raise ShapeError(f"RTD frames are {rtd.shape[1:3]}, model is {model.shape}")
    gray_masks = classify_gray(rtd, model, config)
    rgb_masks = classify_rgb(rtd, model, config)
    fused = [dfs_fuse(g, c) for g, c in zip(gray_masks, rgb_masks)]
    return DBSDBResult(fused, gray_masks, rgb_masks)


def save_model(path: Union[str, Path], model: DynamicBackground) -> None:
    """Write the four normalized backgrounds (gray, R, G, B) as little-endian float64."""
    H, W = model.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, H, W))
        for b in (model.gray, *model.rgb):
            fh.write(np.ascontiguousarray(b.normalized, dtype="<f8").tobytes())


def load_model(path: Union[str, Path]) -> DynamicBackground:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SequenceIOError(f"cannot read model file {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise SequenceIOError(f"{path}: truncated model header")
    magic, version, H, W = _HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise SequenceIOError(f"{path}: not a dynamic-background model file")
    if version != MODEL_VERSION:
        raise SequenceIOError(f"{path}: unsupported model version {version}")
    expected = _HEADER.size + 4 * H * W * 8
    if len(data) != expected:
        raise SequenceIOError(f"{path}: expected {expected} bytes, found {len(data)}")
    mats = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64).reshape(4, H, W)
    frames = [BackgroundFrame(m.copy(), m.copy()) for m in mats]
    return DynamicBackground(frames[0], tuple(frames[1:]))
