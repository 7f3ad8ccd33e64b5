"""Sparse measurement sampling and model-input feature encoding.

Sparse maps keep the normalized label value at a seeded uniform subset of
candidate voxels (free space by default) and exactly zero elsewhere.
Transmitter locations are encoded as per-transmitter anisotropic Gaussian
volumes scaled by linear power and jointly normalized so the strongest
channel peaks at 1. A feature tensor stacks the channels one model-input
config needs, ordered heatmaps, sparse, environment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import OccupancyGrid
from .errors import (
    DimsMismatch,
    DomainMismatch,
    EmptyCandidates,
    EmptyInput,
    InvalidParams,
    InvariantViolation,
    MissingChannel,
    NonPositivePower,
    OutOfBounds,
)
from .grid import GridDims, Point3, check_volume
from .synthesis import RadioMap3D

CONFIG_TAGS = ("sparse_and_tx", "sparse_only", "tx_only")


@dataclass(frozen=True)
class SamplerConfig:
    """xi: sampled fraction of the candidate set; candidates default to free space."""

    xi: float
    free_space_only: bool = True
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.xi <= 1.0):
            raise InvalidParams(f"xi must be in (0, 1], got {self.xi}")


@dataclass
class SparseMap:
    dims: GridDims
    data: np.ndarray  # (W, D, H), label values at samples, 0 elsewhere
    indices: np.ndarray  # (K, 3) int voxel indices, lexicographically sorted

    def __post_init__(self):
        check_volume(self.data, self.dims, "sparse map")

    @property
    def n_samples(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class HeatmapConfig:
    """Gaussian spreads in voxels, horizontal (shared by x, y) and vertical."""

    sigma_xy_vox: float
    sigma_z_vox: float

    def __post_init__(self):
        if not (self.sigma_xy_vox > 0.0 and self.sigma_z_vox > 0.0):
            raise InvalidParams(
                f"sigmas must be positive, got ({self.sigma_xy_vox}, {self.sigma_z_vox})"
            )

    @classmethod
    def from_dims(cls, dims: GridDims) -> "HeatmapConfig":
        # Deliberate dimension pairing; pass explicit sigmas to override.
        return cls(0.05 * min(dims.height, dims.width), 0.1 * dims.depth)


@dataclass
class FeatureTensor:
    """Ordered, named [0, 1] channels for one model-input config."""

    dims: GridDims
    config_tag: str
    channels: list[tuple[str, np.ndarray]]

    def __post_init__(self):
        if self.config_tag not in CONFIG_TAGS:
            raise InvalidParams(f"unknown config tag {self.config_tag!r}")
        for name, data in self.channels:
            check_volume(data, self.dims, f"channel {name!r}")

    def channel_names(self) -> list[str]:
        return [name for name, _ in self.channels]

    def stacked(self) -> np.ndarray:
        """(C, W, D, H) view for model consumption."""
        return np.stack([data for _, data in self.channels])


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def sample_sparse(
    label: RadioMap3D, env: OccupancyGrid, cfg: SamplerConfig
) -> SparseMap:
    """Uniform without-replacement draw of round(xi * |candidates|) voxels.

    Deterministic per cfg.seed. The label must be normalized; sampled voxels
    take its value, everything else is exactly 0.
    """
    if label.dims != env.dims:
        raise DimsMismatch(f"label grid {label.dims.shape} != env grid {env.dims.shape}")
    if label.domain != "normalized":
        raise DomainMismatch(f"sparse sampling expects a normalized label, got {label.domain!r}")
    if cfg.free_space_only:
        flat_candidates = np.flatnonzero(env.free_mask)
    else:
        flat_candidates = np.arange(env.dims.n_voxels)
    if flat_candidates.size == 0:
        raise EmptyCandidates("no candidate voxels to sample")
    k = _round_half_up(cfg.xi * flat_candidates.size)
    rng = np.random.default_rng(cfg.seed)
    chosen = flat_candidates[rng.choice(flat_candidates.size, size=k, replace=False)]
    chosen.sort()
    data = np.zeros(label.dims.shape, dtype=np.float64)
    data.flat[chosen] = label.data.flat[chosen]
    indices = np.stack(np.unravel_index(chosen, label.dims.shape), axis=1)
    return SparseMap(label.dims, data, indices)


def encode_heatmap(
    txs: list[tuple[Point3, float]], dims: GridDims, cfg: HeatmapConfig
) -> np.ndarray:
    """Per-transmitter Gaussian volumes, (n_tx, W, D, H), jointly normalized.

    Each transmitter is (location in meters, power in positive linear scale);
    the Gaussian is centered on the location, scaled by the power, and the
    whole stack is divided by its global maximum, so the strongest channel
    peaks at exactly 1 and relative powers survive.
    """
    if not txs:
        raise EmptyInput("no transmitters to encode")
    for q, p_lin in txs:
        if not dims.contains(q):
            raise OutOfBounds(f"tx {tuple(q)} outside grid extent {dims.extent_m}")
        if not (p_lin > 0.0) or not np.isfinite(p_lin):
            raise NonPositivePower(f"linear power must be > 0, got {p_lin}")
    r = dims.resolution_m
    xv = np.arange(dims.width, dtype=np.float64) + 0.5
    yv = np.arange(dims.depth, dtype=np.float64) + 0.5
    zv = np.arange(dims.height, dtype=np.float64) + 0.5
    sx2 = cfg.sigma_xy_vox * cfg.sigma_xy_vox
    sz2 = cfg.sigma_z_vox * cfg.sigma_z_vox
    stack = np.empty((len(txs),) + dims.shape, dtype=np.float64)
    for i, (q, p_lin) in enumerate(txs):
        dx = xv - q.x / r
        dy = yv - q.y / r
        dz = zv - q.z / r
        horiz = (dx * dx)[:, None] + (dy * dy)[None, :]
        expo = -0.5 * (horiz[:, :, None] / sx2 + (dz * dz)[None, None, :] / sz2)
        stack[i] = p_lin * np.exp(expo)
    stack /= stack.max()
    return stack


def assemble_features(
    config_tag: str,
    env: OccupancyGrid,
    sparse: SparseMap | None = None,
    heatmaps: np.ndarray | None = None,
) -> FeatureTensor:
    """Stack the channels ``config_tag`` requires: [heatmaps...], sparse, env."""
    if config_tag not in CONFIG_TAGS:
        raise InvalidParams(f"unknown config tag {config_tag!r}")
    channels: list[tuple[str, np.ndarray]] = []
    if config_tag in ("sparse_and_tx", "tx_only"):
        if heatmaps is None:
            raise MissingChannel(f"config {config_tag!r} needs transmitter heatmaps")
        if heatmaps.ndim != 4 or heatmaps.shape[1:] != env.dims.shape:
            raise DimsMismatch(
                f"heatmaps shape {heatmaps.shape} != (n_tx, *{env.dims.shape})"
            )
        for i in range(heatmaps.shape[0]):
            channels.append((f"heatmap_{i}", heatmaps[i]))
    if config_tag in ("sparse_and_tx", "sparse_only"):
        if sparse is None:
            raise MissingChannel(f"config {config_tag!r} needs a sparse channel")
        if sparse.dims != env.dims:
            raise DimsMismatch(f"sparse grid {sparse.dims.shape} != env grid {env.dims.shape}")
        channels.append(("sparse", sparse.data))
    channels.append(("env", env.data.astype(np.float64)))
    for name, data in channels:
        if data.min() < 0.0 or data.max() > 1.0:
            raise InvariantViolation(f"channel {name!r} has values outside [0, 1]")
    return FeatureTensor(env.dims, config_tag, channels)
