"""Procedural urban occupancy grids.

A city is a Manhattan-grid layout: square cells of ``block_pitch_vox`` voxels
tile the ground plane; within each cell the building footprint occupies the
first ``block_pitch_vox - street_width_vox`` voxels of each axis and the rest
is street. Each building exists with ``fill_probability`` and gets an
independent uniform height from ``building_height_range_vox`` (inclusive).
Footprints at the grid edge are clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import r3dm
from .errors import IndexOutOfRange, InvalidParams, NonBinaryValue, DimsMismatch
from .grid import GridDims, check_volume


@dataclass(frozen=True)
class CityGenParams:
    block_pitch_vox: int = 16
    street_width_vox: int = 4
    building_height_range_vox: tuple[int, int] = (4, 16)
    fill_probability: float = 0.8

    def __post_init__(self):
        if self.block_pitch_vox < 1:
            raise InvalidParams(f"block pitch must be >= 1, got {self.block_pitch_vox}")
        if not (0 <= self.street_width_vox < self.block_pitch_vox):
            raise InvalidParams(
                f"street width {self.street_width_vox} must be in [0, pitch={self.block_pitch_vox})"
            )
        lo, hi = self.building_height_range_vox
        if not (0 <= lo <= hi):
            raise InvalidParams(f"bad height range {self.building_height_range_vox}")
        if not (0.0 <= self.fill_probability <= 1.0):
            raise InvalidParams(f"fill probability {self.fill_probability} outside [0, 1]")


@dataclass
class OccupancyGrid:
    """Binary volume: 1 = inside a building, 0 = free space."""

    dims: GridDims
    data: np.ndarray  # (W, D, H) uint8

    def __post_init__(self):
        check_volume(self.data, self.dims, "occupancy")

    @property
    def free_mask(self) -> np.ndarray:
        return self.data == 0

    def occupied_count(self) -> int:
        return int(self.data.sum())


def generate_city(dims: GridDims, params: CityGenParams, seed: int) -> OccupancyGrid:
    """Deterministic city draw: same (dims, params, seed) -> same grid.

    Blocks are visited x-major; every block consumes exactly one fill draw and
    one height draw whether or not it is placed, so edits to one parameter
    never reshuffle the rest of the layout.
    """
    lo, hi = params.building_height_range_vox
    if hi > dims.height:
        raise InvalidParams(
            f"building height max {hi} exceeds grid height {dims.height}"
        )
    rng = np.random.default_rng(seed)
    occ = np.zeros(dims.shape, dtype=np.uint8)
    pitch = params.block_pitch_vox
    side = pitch - params.street_width_vox
    nbx = (dims.width + pitch - 1) // pitch
    nby = (dims.depth + pitch - 1) // pitch
    for bx in range(nbx):
        for by in range(nby):
            u = rng.random()
            h = int(rng.integers(lo, hi + 1))
            if u >= params.fill_probability or h == 0:
                continue
            x0 = bx * pitch
            y0 = by * pitch
            x1 = min(x0 + side, dims.width)
            y1 = min(y0 + side, dims.depth)
            if x0 < x1 and y0 < y1:
                occ[x0:x1, y0:y1, :h] = 1
    return OccupancyGrid(dims, occ)


def load_occupancy(path, expect_dims: GridDims | None = None) -> OccupancyGrid:
    """Read a single-channel R3DM occupancy file.

    Values must be exactly 0.0 or 1.0; anything else (including NaN) raises
    NonBinaryValue. ``expect_dims`` pins the grid when the caller already
    knows it.
    """
    dims, data = r3dm.read_volume(path, expect_code=r3dm.CH_ENV)
    if expect_dims is not None and dims != expect_dims:
        raise DimsMismatch(f"file grid {dims.shape} != expected {expect_dims.shape}")
    binary = (data == 0.0) | (data == 1.0)
    if not binary.all():
        bad = data[~binary].flat[0]
        raise NonBinaryValue(f"occupancy contains non-binary value {bad!r}")
    return OccupancyGrid(dims, data.astype(np.uint8))


def save_occupancy(path, grid: OccupancyGrid) -> int:
    return r3dm.write_volume(path, grid.dims, grid.data, r3dm.CH_ENV)


def slice_at_height(grid: OccupancyGrid, z: int) -> np.ndarray:
    """2-D occupancy (W, D) at voxel level z."""
    if not (0 <= z < grid.dims.height):
        raise IndexOutOfRange(f"z={z} outside [0, {grid.dims.height})")
    return grid.data[:, :, z]
