"""Synthetic sequences with known foreground masks.

Four kinds are produced, all deterministic for a fixed seed:

``static_bg``      background pattern only (optionally with sensor noise)
``flicker_bg``     background plus per-pixel sinusoidal flicker
``moving_square``  static background with a square moving at constant velocity
``combined``       flicker background with a moving square

Each random component draws from its own child seed, so switching the
flicker amplitude to zero reproduces ``static_bg`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError

KINDS = ("static_bg", "flicker_bg", "moving_square", "combined")
PATTERNS = ("gradient", "waves")


@dataclass(frozen=True)
class SyntheticParams:
    height: int = 64
    width: int = 64
    frames: int = 30
    channels: int = 1
    pattern: str = "gradient"
    wave_period: float = 32.0
    noise_sigma: float = 0.0
    square_size: int = 8
    square_value: tuple[float, ...] = (255.0,)
    velocity: tuple[float, float] = (1.0, 2.0)  # (rows, cols) per frame
    start: tuple[int, int] = (4, 0)
    square_start: int = 0
    flicker_amplitude: float = 30.0
    flicker_period: float = 10.0
    flicker_rows: Optional[tuple[int, int]] = None  # band of flickering rows; None = whole frame
    flicker_gain_power: float = 1.0  # per-pixel gain is U(0,1)**power; larger = calmer scene

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.frames < 1:
            raise ParameterError("height, width and frames must be positive")
        if self.channels not in (1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {self.channels}")
        if self.pattern not in PATTERNS:
            raise ParameterError(f"unknown pattern {self.pattern!r}")
        if not 1 <= self.square_size <= min(self.height, self.width):
            raise ParameterError("square_size must fit inside the frame")
        if len(self.square_value) not in (1, self.channels):
            raise ParameterError("square_value needs 1 or `channels` entries")
        if self.flicker_amplitude < 0 or self.noise_sigma < 0:
            raise ParameterError("flicker_amplitude and noise_sigma must be non-negative")
        if self.flicker_period <= 0:
            raise ParameterError("flicker_period must be positive")


def background_pattern(p: SyntheticParams) -> np.ndarray:
    """Static scene of shape ``(H, W, channels)`` spanning [0, 255] in every channel."""
    yy, xx = np.mgrid[0 : p.height, 0 : p.width].astype(np.float64)
    layers = []
    for c in range(p.channels):
        if p.pattern == "gradient":
            # channels ramp along different directions
            ramp = [xx / max(p.width - 1, 1), yy / max(p.height - 1, 1),
                    (xx + yy) / max(p.width + p.height - 2, 1)][c]
            layers.append(255.0 * ramp)
        else:
            phase = c * np.pi / 3
            k = 2 * np.pi / p.wave_period
            layers.append(127.5 + 127.5 * np.sin(k * xx + phase) * np.cos(k * yy))
    return np.stack(layers, axis=-1)


def square_positions(p: SyntheticParams) -> list[Optional[tuple[int, int]]]:
    """Top-left corner per frame (``None`` before ``square_start``).

    The square wraps to the opposite edge when it would leave the frame.
    """
    span_r = p.height - p.square_size + 1
    span_c = p.width - p.square_size + 1
    out: list[Optional[tuple[int, int]]] = []
    for t in range(p.frames):
        if t < p.square_start:
            out.append(None)
            continue
        k = t - p.square_start
        r = int(round(p.start[0] + p.velocity[0] * k)) % span_r
        c = int(round(p.start[1] + p.velocity[1] * k)) % span_c
        out.append((r, c))
    return out


def gen_synthetic(kind: str, params: SyntheticParams = SyntheticParams(), seed: int = 0
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(cube, truth)``.

    ``cube`` is ``(n, H, W)`` for one channel or ``(n, H, W, 3)``, integer
    valued in [0, 255] and stored as float64; ``truth`` is a boolean
    ``(n, H, W)`` array of foreground masks.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown synthetic kind {kind!r}; expected one of {', '.join(KINDS)}")
    p = params
    noise_seq, flicker_seq = np.random.SeedSequence(seed).spawn(2)
    shape = (p.frames, p.height, p.width, p.channels)

    cube = np.broadcast_to(background_pattern(p), shape).copy()

    if kind in ("flicker_bg", "combined"):
        rng = np.random.default_rng(flicker_seq)
        phase = rng.uniform(0, 2 * np.pi, size=(p.height, p.width, p.channels))
        gain = rng.uniform(0.0, 1.0, size=(p.height, p.width, 1)) ** p.flicker_gain_power
        band = np.zeros((p.height, p.width, 1))
        lo, hi = p.flicker_rows if p.flicker_rows is not None else (0, p.height)
        band[lo:hi] = 1.0
        t = np.arange(p.frames, dtype=np.float64)[:, None, None, None]
        cube += p.flicker_amplitude * band * gain * np.sin(2 * np.pi * t / p.flicker_period + phase)

    if p.noise_sigma > 0:
        cube += np.random.default_rng(noise_seq).normal(0.0, p.noise_sigma, size=shape)

    truth = np.zeros((p.frames, p.height, p.width), dtype=bool)
    if kind in ("moving_square", "combined"):
        value = np.broadcast_to(np.asarray(p.square_value, dtype=np.float64), (p.channels,))
        s = p.square_size
        for t, pos in enumerate(square_positions(p)):
            if pos is None:
                continue
            r, c = pos
            cube[t, r : r + s, c : c + s, :] = value
            truth[t, r : r + s, c : c + s] = True

    cube = np.rint(np.clip(cube, 0.0, 255.0))
    if p.channels == 1:
        cube = cube[..., 0]
    return cube, truth


def static_benchmark(seed: int = 0, frames: int = 30, train_frames: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gradient scene with a bright 8x8 square, 64x64 grayscale.

    With ``train_frames > 0`` the square appears only after that many
    background-only frames.
    """
    p = SyntheticParams(frames=frames + train_frames, square_start=train_frames)
    return gen_synthetic("moving_square", p, seed)


def flicker_benchmark_params(bgd_frames: int = 40, rtd_frames: int = 30) -> SyntheticParams:
    """64x64 RGB gradient scene whose top 24 rows flicker (mostly weakly, a few
    pixels strongly); a yellow square enters inside the band after the BGD."""
    return SyntheticParams(
        frames=bgd_frames + rtd_frames,
        channels=3,
        pattern="gradient",
        square_value=(255.0, 240.0, 40.0),
        square_start=bgd_frames,
        start=(20, 0),
        flicker_amplitude=30.0,
        flicker_rows=(0, 24),
        flicker_gain_power=2.0,
    )


def flicker_benchmark(seed: int = 0, bgd_frames: int = 40, rtd_frames: int = 30):
    """RGB scene with sinusoidal flicker; returns ``(bgd, rtd, rtd_truth)``."""
    cube, truth = gen_synthetic("combined", flicker_benchmark_params(bgd_frames, rtd_frames), seed)
    return cube[:bgd_frames], cube[bgd_frames:], truth[bgd_frames:]
