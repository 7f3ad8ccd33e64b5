"""Per-floor 2-D propagation stand-in.

Stands in for a pre-trained planar predictor: per height slice, received power
falls off log-linearly with horizontal distance and loses a fixed number of dB
per wall crossed on the straight path from the transmitter, floored at
``floor_db``. Wall crossings use a supercover line traversal (every voxel the
segment touches, so diagonal building corners cannot be slipped through),
with the two endpoint voxels excluded.

Slices can instead be imported from disk (R3DM, channel type 32) when a real
planar model produced them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numba import njit

from . import r3dm
from .errors import DimsMismatch, InvalidParams, NonFiniteValue, OutOfBounds
from .grid import GridDims, check_volume

if TYPE_CHECKING:  # structural use only; avoids a module cycle
    from .env import OccupancyGrid
    from .synthesis import Transmitter


@dataclass(frozen=True)
class Base2DParams:
    """Analytic slice model: p = P_tx + a0 + b0*log10(d2) - wall_loss*crossings."""

    a0_db: float = -40.0
    b0_db_per_decade: float = -20.0
    wall_loss_db: float = 6.0
    floor_db: float = -150.0

    def __post_init__(self):
        vals = (self.a0_db, self.b0_db_per_decade, self.wall_loss_db, self.floor_db)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParams(f"non-finite base-model parameter in {vals}")
        if self.b0_db_per_decade >= 0:
            raise InvalidParams(
                f"distance slope must be negative, got {self.b0_db_per_decade}"
            )
        if self.wall_loss_db < 0:
            raise InvalidParams(f"wall loss must be >= 0, got {self.wall_loss_db}")


@dataclass
class BaseMap3D:
    """Stack of per-height 2-D predictions over the full grid, in dB."""

    dims: GridDims
    data: np.ndarray  # (W, D, H) float

    def __post_init__(self):
        check_volume(self.data, self.dims, "base map")
        if not np.isfinite(self.data).all():
            raise NonFiniteValue("base map contains non-finite values")


@njit(cache=True)
def _supercover_counts(occ, x0, y0, tqx, tqy, out):  # pragma: no cover - jitted
    # Coordinates in voxel units; voxel (i, j) spans [i, i+1) x [j, j+1).
    # Counts occupied voxels the segment touches, excluding both endpoint
    # voxels. Exact tmax ties are corner crossings: both corner-adjacent side
    # voxels count, then the walk advances diagonally.
    for k in range(tqx.size):
        x1 = tqx[k]
        y1 = tqy[k]
        ix = int(np.floor(x0))
        iy = int(np.floor(y0))
        ex = int(np.floor(x1))
        ey = int(np.floor(y1))
        dx = x1 - x0
        dy = y1 - y0
        sx = 0
        sy = 0
        tmaxx = np.inf
        tmaxy = np.inf
        tdx = np.inf
        tdy = np.inf
        if dx > 0.0:
            sx = 1
            tmaxx = ((ix + 1) - x0) / dx
            tdx = 1.0 / dx
        elif dx < 0.0:
            sx = -1
            tmaxx = (ix - x0) / dx
            tdx = -1.0 / dx
        if dy > 0.0:
            sy = 1
            tmaxy = ((iy + 1) - y0) / dy
            tdy = 1.0 / dy
        elif dy < 0.0:
            sy = -1
            tmaxy = (iy - y0) / dy
            tdy = -1.0 / dy
        cnt = 0
        cx = ix
        cy = iy
        nmax = abs(ex - ix) + abs(ey - iy) + 2
        for _ in range(nmax):
            if cx == ex and cy == ey:
                break
            if tmaxx < tmaxy:
                cx += sx
                tmaxx += tdx
                if (cx != ex or cy != ey) and (cx != ix or cy != iy):
                    cnt += occ[cx, cy]
            elif tmaxy < tmaxx:
                cy += sy
                tmaxy += tdy
                if (cx != ex or cy != ey) and (cx != ix or cy != iy):
                    cnt += occ[cx, cy]
            else:
                ax = cx + sx
                bx = cy + sy
                if (ax != ex or cy != ey) and (ax != ix or cy != iy):
                    cnt += occ[ax, cy]
                if (cx != ex or bx != ey) and (cx != ix or bx != iy):
                    cnt += occ[cx, bx]
                cx += sx
                cy += sy
                tmaxx += tdx
                tmaxy += tdy
                if (cx != ex or cy != ey) and (cx != ix or cy != iy):
                    cnt += occ[cx, cy]
        out[k] = cnt


def _require_inside(p, extent_x, extent_y, what):
    if not (0.0 <= p[0] < extent_x and 0.0 <= p[1] < extent_y):
        raise OutOfBounds(f"{what} {p} outside slice extent ({extent_x}, {extent_y})")


def count_wall_crossings(
    env2d: np.ndarray,
    p_from: tuple[float, float],
    p_to: tuple[float, float],
    resolution_m: float = 1.0,
) -> int:
    """Occupied voxels touched by the segment, endpoints' voxels excluded."""
    w, d = env2d.shape
    ex, ey = w * resolution_m, d * resolution_m
    _require_inside(p_from, ex, ey, "from")
    _require_inside(p_to, ex, ey, "to")
    occ = np.ascontiguousarray(env2d, dtype=np.uint8)
    out = np.empty(1, dtype=np.int32)
    _supercover_counts(
        occ,
        p_from[0] / resolution_m,
        p_from[1] / resolution_m,
        np.array([p_to[0] / resolution_m]),
        np.array([p_to[1] / resolution_m]),
        out,
    )
    return int(out[0])


def wall_crossing_map(
    env2d: np.ndarray, tx_xy: tuple[float, float], resolution_m: float = 1.0
) -> np.ndarray:
    """count_wall_crossings from tx to every voxel center, as a (W, D) map."""
    w, d = env2d.shape
    _require_inside(tx_xy, w * resolution_m, d * resolution_m, "tx")
    occ = np.ascontiguousarray(env2d, dtype=np.uint8)
    cx = np.repeat(np.arange(w, dtype=np.float64) + 0.5, d)
    cy = np.tile(np.arange(d, dtype=np.float64) + 0.5, w)
    out = np.empty(w * d, dtype=np.int32)
    _supercover_counts(occ, tx_xy[0] / resolution_m, tx_xy[1] / resolution_m, cx, cy, out)
    return out.reshape(w, d)


def predict_slice(
    env2d: np.ndarray,
    tx_xy: tuple[float, float],
    p_tx_db: float,
    params: Base2DParams,
    resolution_m: float = 1.0,
) -> np.ndarray:
    """Analytic per-slice prediction at every voxel center, floored at floor_db.

    The horizontal distance is clamped below at half a voxel so the
    transmitter's own column stays finite.
    """
    w, d = env2d.shape
    _require_inside(tx_xy, w * resolution_m, d * resolution_m, "tx")
    xc = (np.arange(w, dtype=np.float64) + 0.5) * resolution_m
    yc = (np.arange(d, dtype=np.float64) + 0.5) * resolution_m
    d2 = np.hypot(xc[:, None] - tx_xy[0], yc[None, :] - tx_xy[1])
    d2 = np.maximum(d2, 0.5 * resolution_m)
    crossings = wall_crossing_map(env2d, tx_xy, resolution_m)
    val = (
        p_tx_db
        + params.a0_db
        + params.b0_db_per_decade * np.log10(d2)
        - params.wall_loss_db * crossings
    )
    return np.maximum(val, params.floor_db)


def stack_slices(env: "OccupancyGrid", tx: "Transmitter", params: Base2DParams) -> BaseMap3D:
    """Run predict_slice at every height and stack into a BaseMap3D."""
    dims = env.dims
    if not dims.contains(tx.q):
        raise OutOfBounds(f"tx {tuple(tx.q)} outside grid extent {dims.extent_m}")
    out = np.empty(dims.shape, dtype=np.float64)
    for z in range(dims.height):
        out[:, :, z] = predict_slice(
            env.data[:, :, z], (tx.q.x, tx.q.y), tx.power_db, params, dims.resolution_m
        )
    return BaseMap3D(dims, out)


def export_slices(path, base: BaseMap3D) -> int:
    """Persist as single-channel R3DM (type 32); payload is float32."""
    return r3dm.write_volume(path, base.dims, base.data, r3dm.CH_BASE2D)


def import_slices(path, expect_dims: GridDims | None = None) -> BaseMap3D:
    """Load a base-map stack produced here or by an external planar model."""
    dims, data = r3dm.read_volume(path, expect_code=r3dm.CH_BASE2D)
    if expect_dims is not None and dims != expect_dims:
        raise DimsMismatch(f"file grid {dims.shape} != expected {expect_dims.shape}")
    if not np.isfinite(data).all():
        raise NonFiniteValue("imported base map contains non-finite values")
    return BaseMap3D(dims, data.astype(np.float64))
