"""Overlapping spatial blocks: run a pipeline per block, OR the masks back together."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DiffBGError, ParameterError, ShapeError

Pipeline = Callable[..., "np.ndarray | list[np.ndarray]"]


@dataclass(frozen=True)
class Block:
    index: int
    row: int
    col: int
    height: int
    width: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.row, self.row + self.height), slice(self.col, self.col + self.width)


@dataclass(frozen=True)
class BlockLayout:
    height: int
    width: int
    grid_rows: int
    grid_cols: int
    overlap: int
    blocks: tuple[Block, ...]


def _axis_spans(length: int, parts: int, overlap: int, axis: str) -> list[tuple[int, int]]:
    """Near-equal partition of ``[0, length)`` widened so neighbours share ``overlap`` pixels."""
    edges = [round(k * length / parts) for k in range(parts + 1)]
    if parts == 1:
        return [(0, length)]
    lo_ext, hi_ext = overlap // 2, overlap - overlap // 2
    spans = []
    for k in range(parts):
        start = edges[k] - (lo_ext if k > 0 else 0)
        stop = edges[k + 1] + (hi_ext if k < parts - 1 else 0)
        if stop - start < 2 * overlap or start < 0 or stop > length:
            raise ParameterError(
                f"overlap {overlap} too large for {parts} blocks over {length} {axis}: "
                f"block {k} would be {stop - start} px, needs at least {2 * overlap}"
            )
        spans.append((start, stop))
    return spans


def make_layout(height: int, width: int, grid_rows: int = 2, grid_cols: int = 2,
                overlap: int = 20) -> BlockLayout:
    if min(height, width) < 1:
        raise ParameterError(f"frame size must be positive, got {height}x{width}")
    if grid_rows < 1 or grid_cols < 1:
        raise ParameterError(f"grid must be at least 1x1, got {grid_rows}x{grid_cols}")
    if overlap < 0:
        raise ParameterError(f"overlap must be non-negative, got {overlap}")
    if grid_rows > height or grid_cols > width:
        raise ParameterError(f"grid {grid_rows}x{grid_cols} is finer than the {height}x{width} frame")
    rows = _axis_spans(height, grid_rows, overlap, "rows")
    cols = _axis_spans(width, grid_cols, overlap, "columns")
    blocks = tuple(
        Block(i * grid_cols + j, r0, c0, r1 - r0, c1 - c0)
        for i, (r0, r1) in enumerate(rows)
        for j, (c0, c1) in enumerate(cols)
    )
    return BlockLayout(height, width, grid_rows, grid_cols, overlap, blocks)


def run_blocked(cube, layout: BlockLayout, pipeline: Pipeline, workers: int = 1) -> np.ndarray:
    """Apply ``pipeline`` to every block's sub-cube and stitch the masks with OR.

    ``pipeline`` maps a cube ``(n, h, w[, 3])`` to ``n`` boolean ``(h, w)``
    masks.  ``cube`` may also be a tuple of cubes with equal frame size
    (e.g. training and test sequences); each is cropped to the block and
    passed as a separate argument.  Blocks share no state, so the result
    does not depend on ``workers`` or on completion order.
    """
    cubes = tuple(np.asarray(c) for c in cube) if isinstance(cube, tuple) else (np.asarray(cube),)
    for c in cubes:
        if c.shape[1:3] != (layout.height, layout.width):
            raise ShapeError(f"cube frames are {c.shape[1:3]}, layout covers {(layout.height, layout.width)}")

    def run_one(block: Block) -> np.ndarray:
        rs, cs = block.slices
        try:
            out = np.asarray(pipeline(*(c[:, rs, cs] for c in cubes)), dtype=bool)
        except DiffBGError as exc:
            raise type(exc)(f"block {block.index} at ({block.row}, {block.col}): {exc}") from exc
        if out.shape[1:] != (block.height, block.width):
            raise ShapeError(f"block {block.index}: pipeline returned masks of shape {out.shape[1:]}")
        return out

    if workers > 1 and len(layout.blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, layout.blocks))
    else:
        results = [run_one(b) for b in layout.blocks]

    n = results[0].shape[0]
    masks = np.zeros((n, layout.height, layout.width), dtype=bool)
    for block, out in zip(layout.blocks, results):
        if out.shape[0] != n:
            raise ShapeError(f"block {block.index} produced {out.shape[0]} masks, expected {n}")
        rs, cs = block.slices
        masks[:, rs, cs] |= out
    return masks
