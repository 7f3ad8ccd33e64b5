"""Voxel grid geometry shared across the pipeline.

Conventions (used everywhere, never repeated in callers):

* A grid has ``width`` voxels along x, ``depth`` along y, ``height`` along z.
* Voxel ``(ix, iy, iz)`` spans ``[ix, ix+1) x [iy, iy+1) x [iz, iz+1)`` in voxel
  units and its center sits at ``((ix+0.5)*res, (iy+0.5)*res, (iz+0.5)*res)``
  meters.
* Dense volumes are float arrays of shape ``(width, depth, height)`` in C order,
  so the flat index of ``(x, y, z)`` is ``(x*depth + y)*height + z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IndexOutOfRange, InvalidParams, OutOfBounds


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class GridDims:
    """Voxel counts per axis plus the edge length of one voxel in meters."""

    width: int
    depth: int
    height: int
    resolution_m: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.depth < 1 or self.height < 1:
            raise InvalidParams(f"voxel counts must be >= 1, got {self.shape}")
        if not (self.resolution_m > 0.0) or not np.isfinite(self.resolution_m):
            raise InvalidParams(f"resolution_m must be positive, got {self.resolution_m}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.width, self.depth, self.height)

    @property
    def n_voxels(self) -> int:
        return self.width * self.depth * self.height

    @property
    def extent_m(self) -> tuple[float, float, float]:
        r = self.resolution_m
        return (self.width * r, self.depth * r, self.height * r)

    def center_of(self, ix: int, iy: int, iz: int) -> Point3:
        """Center of voxel (ix, iy, iz) in meters."""
        if not (0 <= ix < self.width and 0 <= iy < self.depth and 0 <= iz < self.height):
            raise IndexOutOfRange(f"voxel ({ix}, {iy}, {iz}) outside grid {self.shape}")
        r = self.resolution_m
        return Point3((ix + 0.5) * r, (iy + 0.5) * r, (iz + 0.5) * r)

    def voxel_of(self, p: Point3) -> tuple[int, int, int]:
        """Index of the voxel containing point p (meters)."""
        wx, wy, wz = self.extent_m
        if not (0.0 <= p.x < wx and 0.0 <= p.y < wy and 0.0 <= p.z < wz):
            raise OutOfBounds(f"point {tuple(p)} outside grid extent {(wx, wy, wz)}")
        r = self.resolution_m
        return (int(p.x / r), int(p.y / r), int(p.z / r))

    def contains(self, p: Point3) -> bool:
        wx, wy, wz = self.extent_m
        return 0.0 <= p.x < wx and 0.0 <= p.y < wy and 0.0 <= p.z < wz

    def axis_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis voxel-center coordinates in meters (1-D arrays)."""
        r = self.resolution_m
        return (
            (np.arange(self.width, dtype=np.float64) + 0.5) * r,
            (np.arange(self.depth, dtype=np.float64) + 0.5) * r,
            (np.arange(self.height, dtype=np.float64) + 0.5) * r,
        )


def check_volume(data: np.ndarray, dims: GridDims, name: str = "volume") -> np.ndarray:
    """Validate array shape against dims; returns the array unchanged."""
    from .errors import ShapeMismatch

    if data.shape != dims.shape:
        raise ShapeMismatch(f"{name} shape {data.shape} != grid {dims.shape}")
    return data
