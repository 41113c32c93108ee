"""Tile binning and depth sorting of projected splats.

A splat instance is one (tile, primitive) pair; a primitive appears once in
every tile its radius square overlaps.  Instances are sorted by the composite
key (tile id, depth, primitive index), all ascending, so each tile's range is
already in front-to-back order and ties resolve deterministically.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

TILE = 16


@dataclasses.dataclass
class TileGrid:
    tile_px: int
    tiles_x: int
    tiles_y: int
    ranges: np.ndarray      # (tiles_x*tiles_y, 2) half-open [start, end)
    inst_prim: np.ndarray   # (M,) primitive index per sorted instance
    inst_tile: np.ndarray   # (M,) tile id per sorted instance


def grid_dims(width: int, height: int) -> tuple[int, int]:
    return -(-width // TILE), -(-height // TILE)


def tile_rect(mean2d, radius, tiles_x: int, tiles_y: int):
    """Half-open tile rectangle [x0,x1) x [y0,y1) covered by a splat."""
    r = math.ceil(radius)
    x0 = min(tiles_x, max(0, math.floor((mean2d[0] - r) / TILE)))
    x1 = min(tiles_x, max(0, math.floor((mean2d[0] + r) / TILE) + 1))
    y0 = min(tiles_y, max(0, math.floor((mean2d[1] - r) / TILE)))
    y1 = min(tiles_y, max(0, math.floor((mean2d[1] + r) / TILE) + 1))
    return x0, x1, y0, y1


def bin_arrays(mean2d: np.ndarray, radius: np.ndarray, depth: np.ndarray,
               valid: np.ndarray, width: int, height: int) -> TileGrid:
    """Vectorized binning over primitive arrays."""
    ntx, nty = grid_dims(width, height)
    n = mean2d.shape[0]

    r = np.ceil(radius)
    x0 = np.clip(np.floor((mean2d[:, 0] - r) / TILE), 0, ntx).astype(np.int64)
    x1 = np.clip(np.floor((mean2d[:, 0] + r) / TILE) + 1, 0, ntx).astype(np.int64)
    y0 = np.clip(np.floor((mean2d[:, 1] - r) / TILE), 0, nty).astype(np.int64)
    y1 = np.clip(np.floor((mean2d[:, 1] + r) / TILE) + 1, 0, nty).astype(np.int64)

    nx = np.where(valid, x1 - x0, 0).clip(min=0)
    ny = np.where(valid, y1 - y0, 0).clip(min=0)
    counts = nx * ny
    total = int(counts.sum())
    n_tiles = ntx * nty
    if total == 0:
        return TileGrid(TILE, ntx, nty, np.zeros((n_tiles, 2), dtype=np.int64),
                        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    prim = np.repeat(np.arange(n), counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    within = np.arange(total) - np.repeat(offsets, counts)
    nx_r = np.repeat(nx, counts)
    tx = np.repeat(x0, counts) + within % nx_r
    ty = np.repeat(y0, counts) + within // nx_r
    tile = ty * ntx + tx

    order = np.lexsort((prim, depth[prim], tile))
    inst_prim = prim[order]
    inst_tile = tile[order]

    starts = np.searchsorted(inst_tile, np.arange(n_tiles), side="left")
    ends = np.searchsorted(inst_tile, np.arange(n_tiles), side="right")
    ranges = np.stack([starts, ends], axis=1)
    return TileGrid(TILE, ntx, nty, ranges, inst_prim, inst_tile)


def bin_and_sort(splats, width: int, height: int) -> TileGrid:
    """Binning over a list of screen splats (None entries are culled)."""
    n = len(splats)
    mean2d = np.zeros((n, 2))
    radius = np.zeros(n)
    depth = np.zeros(n)
    valid = np.zeros(n, dtype=bool)
    for i, sp in enumerate(splats):
        if sp is None:
            continue
        mean2d[i] = sp.mean2d
        radius[i] = sp.radius
        depth[i] = sp.depth
        valid[i] = True
    return bin_arrays(mean2d, radius, depth, valid, width, height)
