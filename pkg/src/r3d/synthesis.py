"""Whole-volume map synthesis and multi-transmitter composition.

A single-transmitter map evaluates the target model once per voxel center,
with two carve-outs: the transmitter's own voxel reports the transmit power,
and the rest of its vertical column (horizontal distance exactly zero, where
the model is undefined) reports the darkest representable value. Maps from
several transmitters combine in linear power, never in dB.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .channel_model import TargetCoefficients
from .env import OccupancyGrid
from .errors import (
    ConstantDataset,
    DimsMismatch,
    DomainMismatch,
    EmptyInput,
    InvalidParams,
    NonFiniteValue,
    OutOfBounds,
)
from .grid import GridDims, Point3, check_volume
from .propagate2d import BaseMap3D

DEFAULT_CLAMP_MIN_DB = -150.0
DEFAULT_CLAMP_MAX_DB = 10.0

Domain = Literal["db", "normalized"]

# Instrumentation: voxels evaluated by synth_single since the last reset.
# Exists so linear-time behavior is assertable; not part of the data path.
_voxel_evals = 0


def voxel_eval_count() -> int:
    return _voxel_evals


def reset_voxel_eval_count():
    global _voxel_evals
    _voxel_evals = 0


@dataclass(frozen=True)
class Transmitter:
    """Source at a voxel center ``q`` (meters) with transmit power in dB."""

    q: Point3
    power_db: float

    def __post_init__(self):
        if not np.isfinite(self.power_db):
            raise InvalidParams(f"power_db must be finite, got {self.power_db}")
        if not all(np.isfinite(v) for v in self.q):
            raise InvalidParams(f"position must be finite, got {tuple(self.q)}")

    @property
    def power_linear(self) -> float:
        return float(10.0 ** (self.power_db / 10.0))


@dataclass
class RadioMap3D:
    """Dense scalar volume tagged with its value domain (dB or normalized)."""

    dims: GridDims
    data: np.ndarray  # (W, D, H)
    domain: Domain = "db"

    def __post_init__(self):
        check_volume(self.data, self.dims, "radio map")
        if self.domain not in ("db", "normalized"):
            raise InvalidParams(f"unknown domain tag {self.domain!r}")
        if not np.isfinite(self.data).all():
            raise NonFiniteValue("radio map contains non-finite values")
        if self.domain == "normalized":
            lo, hi = self.data.min(), self.data.max()
            if lo < 0.0 or hi > 1.0:
                raise InvalidParams(
                    f"normalized map out of [0, 1]: [{lo}, {hi}]"
                )


@dataclass(frozen=True)
class ComposeConfig:
    noise_floor_db: float | None = None
    clamp_min_db: float = DEFAULT_CLAMP_MIN_DB
    clamp_max_db: float = DEFAULT_CLAMP_MAX_DB

    def __post_init__(self):
        if self.noise_floor_db is not None and not np.isfinite(self.noise_floor_db):
            raise InvalidParams(f"noise floor must be finite, got {self.noise_floor_db}")
        if not (self.clamp_min_db < self.clamp_max_db):
            raise InvalidParams(
                f"clamp_min {self.clamp_min_db} must be < clamp_max {self.clamp_max_db}"
            )


@dataclass(frozen=True)
class NormStats:
    """Dataset-global dB range, plus the quantization depth (0 = none)."""

    vmin_db: float
    vmax_db: float
    quant_levels: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.vmin_db) and np.isfinite(self.vmax_db)):
            raise InvalidParams("norm bounds must be finite")
        if not (self.vmin_db < self.vmax_db):
            raise InvalidParams(f"vmin {self.vmin_db} must be < vmax {self.vmax_db}")
        if self.quant_levels != 0 and not (2 <= self.quant_levels <= 65536):
            raise InvalidParams(f"quant_levels {self.quant_levels} outside {{0}} u [2, 65536]")


def synth_single(
    env: OccupancyGrid,
    tx: Transmitter,
    phi: TargetCoefficients,
    base: BaseMap3D,
    clamp_min_db: float = DEFAULT_CLAMP_MIN_DB,
) -> RadioMap3D:
    """Target-model map for one transmitter; exactly one evaluation per voxel."""
    global _voxel_evals
    dims = env.dims
    if base.dims != dims:
        raise DimsMismatch(f"base grid {base.dims.shape} != env grid {dims.shape}")
    if not dims.contains(tx.q):
        raise OutOfBounds(f"tx {tuple(tx.q)} outside grid extent {dims.extent_m}")
    qx, qy, qz = dims.voxel_of(tx.q)

    xc, yc, zc = dims.axis_centers()
    dx = xc - tx.q.x
    dy = yc - tx.q.y
    dz = zc - tx.q.z
    d2 = np.hypot(dx[:, None], dy[None, :])  # (W, D)
    d3 = np.sqrt((d2 * d2)[:, :, None] + (dz * dz)[None, None, :])  # (W, D, H)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            phi.a
            + phi.b * np.log10(d3)
            + phi.c * np.log10(d2)[:, :, None]
            + phi.e * base.data
        )
    _voxel_evals += dims.n_voxels
    # Column directly above/below the source: model undefined, darkest value.
    out[d2 == 0.0, :] = clamp_min_db
    out[qx, qy, qz] = tx.power_db
    return RadioMap3D(dims, out, "db")


def compose_multi(maps: list[RadioMap3D], cfg: ComposeConfig = ComposeConfig()) -> RadioMap3D:
    """Combine per-transmitter maps in linear power, then clamp to dB range.

    Sum order is the list order, so results are bit-reproducible; an optional
    noise floor adds a constant linear term everywhere.
    """
    if not maps:
        raise EmptyInput("no maps to compose")
    dims = maps[0].dims
    for m in maps:
        if m.dims != dims:
            raise DimsMismatch(f"map grid {m.dims.shape} != {dims.shape}")
        if m.domain != "db":
            raise DomainMismatch(f"compose_multi needs dB maps, got {m.domain!r}")
    linear = np.zeros(dims.shape, dtype=np.float64)
    for m in maps:
        linear += 10.0 ** (m.data / 10.0)
    if cfg.noise_floor_db is not None:
        linear += 10.0 ** (cfg.noise_floor_db / 10.0)
    out = 10.0 * np.log10(linear)
    np.clip(out, cfg.clamp_min_db, cfg.clamp_max_db, out=out)
    return RadioMap3D(dims, out, "db")


def compute_dataset_stats(maps: Iterable[RadioMap3D], quant_levels: int = 0) -> NormStats:
    """Global value range over a stream of dB maps (single pass)."""
    vmin = np.inf
    vmax = -np.inf
    n = 0
    for m in maps:
        if m.domain != "db":
            raise DomainMismatch(f"stats are over dB maps, got {m.domain!r}")
        vmin = min(vmin, float(m.data.min()))
        vmax = max(vmax, float(m.data.max()))
        n += 1
    if n == 0:
        raise EmptyInput("no maps")
    if vmin == vmax:
        raise ConstantDataset(f"all {n} maps are the constant {vmin}")
    return NormStats(vmin, vmax, quant_levels)


def normalize_quantize(m: RadioMap3D, stats: NormStats) -> RadioMap3D:
    """Affine-map dB values to [0, 1] and optionally snap to Q levels.

    Quantization rounds half away from zero: level = floor(v*(Q-1) + 0.5).
    """
    if m.domain != "db":
        raise DomainMismatch(f"normalize_quantize expects a dB map, got {m.domain!r}")
    v = (m.data - stats.vmin_db) / (stats.vmax_db - stats.vmin_db)
    np.clip(v, 0.0, 1.0, out=v)
    if stats.quant_levels >= 2:
        q = stats.quant_levels - 1
        v = np.floor(v * q + 0.5) / q
    return RadioMap3D(m.dims, v, "normalized")
