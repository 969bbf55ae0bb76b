"""Numbered image sequences on disk (8-bit grayscale or RGB rasters)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from .errors import ParameterError, SequenceIOError, ShapeError
from .frames import to_grayscale

DEFAULT_PATTERN = "frame_{:05d}.png"
MASK_PATTERN = "mask_{:05d}.png"


@dataclass(frozen=True)
class SequenceManifest:
    directory: Path
    pattern: str = DEFAULT_PATTERN
    channels: Optional[int] = None  # None: take it from the first frame
    truth_pattern: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "directory", Path(self.directory))
        _pattern_regex(self.pattern)
        if self.truth_pattern is not None:
            _pattern_regex(self.truth_pattern)
        if self.channels not in (None, 1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {self.channels}")


def _pattern_regex(pattern: str) -> re.Pattern:
    fields = re.findall(r"\{[^}]*\}", pattern)
    if len(fields) != 1:
        raise ParameterError(f"pattern {pattern!r} must contain exactly one index field like {{:05d}}")
    prefix, suffix = pattern.split(fields[0])
    return re.compile(re.escape(prefix) + r"(\d+)" + re.escape(suffix) + r"\Z")


def list_indices(directory: Union[str, Path], pattern: str) -> list[int]:
    """Frame indices present in ``directory``; raises if they are not 0..n-1."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SequenceIOError(f"{directory} is not a directory")
    rx = _pattern_regex(pattern)
    found = sorted(int(m.group(1)) for p in directory.iterdir() if (m := rx.match(p.name)))
    if not found:
        raise SequenceIOError(f"no frames matching {pattern!r} in {directory}")
    for expected, idx in enumerate(found):
        if idx != expected:
            raise SequenceIOError(f"{directory}: frame index {expected} is missing (next present: {idx})")
    return found


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            return np.asarray(img, dtype=np.float64)
    except OSError as exc:
        raise SequenceIOError(f"cannot decode {path}: {exc}") from exc


def load_sequence(manifest: SequenceManifest) -> np.ndarray:
    """Frames in index order as float64 in [0, 255]: ``(n, H, W)`` or ``(n, H, W, 3)``."""
    indices = list_indices(manifest.directory, manifest.pattern)
    frames = []
    for i in indices:
        path = manifest.directory / manifest.pattern.format(i)
        img = _read_image(path)
        channels = manifest.channels or (1 if img.ndim == 2 else 3)
        if channels == 1 and img.ndim == 3:
            img = to_grayscale(img)
        elif channels == 3 and img.ndim == 2:
            img = np.repeat(img[..., None], 3, axis=-1)
        if frames and img.shape != frames[0].shape:
            raise ShapeError(f"{path} has shape {img.shape}, frame 0 has {frames[0].shape}")
        frames.append(img)
    return np.stack(frames)


def load_truth(manifest: SequenceManifest) -> np.ndarray:
    if manifest.truth_pattern is None:
        raise ParameterError("manifest has no ground-truth pattern")
    return load_masks(manifest.directory, manifest.truth_pattern)


def save_sequence(directory: Union[str, Path], cube: np.ndarray, pattern: str = DEFAULT_PATTERN) -> list[Path]:
    """Write frames as 8-bit images (values rounded and clipped to [0, 255])."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _pattern_regex(pattern)
    paths = []
    for i, frame in enumerate(np.asarray(cube)):
        data = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
        path = directory / pattern.format(i)
        Image.fromarray(data).save(path)
        paths.append(path)
    return paths


def save_masks(directory: Union[str, Path], masks: np.ndarray, pattern: str = MASK_PATTERN) -> list[Path]:
    """Masks as single-channel images, 0 = background, 255 = foreground."""
    masks = np.asarray(masks, dtype=bool)
    return save_sequence(directory, masks.astype(np.uint8) * 255, pattern)


def load_masks(directory: Union[str, Path], pattern: str = MASK_PATTERN) -> np.ndarray:
    cube = load_sequence(SequenceManifest(Path(directory), pattern, channels=1))
    return cube > 127
