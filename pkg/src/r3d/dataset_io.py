"""Sample persistence, the end-to-end dataset builder, and the manifest.

A sample file is one R3DM container holding the channel superset
[heatmap_0..k-1, sparse, env, label], so every model-input config can be
assembled from the same file. The manifest (manifest.json next to the
samples) records per-sample provenance: environment id, transmitters, target
coefficients, sampling fraction, and the file checksum, plus the dataset-wide
normalization stats and the environment-level split.

Builds are deterministic: every random draw comes from a generator keyed by
(build seed, purpose tag, indices), never from call order, so the same config
and seed produce byte-identical trees regardless of worker count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import r3dm
from .channel_model import TargetCoefficients
from .env import CityGenParams, OccupancyGrid, generate_city
from .errors import (
    DimsMismatch,
    InvalidParams,
    InvariantViolation,
    MissingChannel,
)
from .fitting import CoefficientSpace, oversample
from .grid import GridDims
from .propagate2d import Base2DParams, BaseMap3D, import_slices, stack_slices
from .sampling_encoding import (
    FeatureTensor,
    HeatmapConfig,
    SamplerConfig,
    assemble_features,
    encode_heatmap,
    sample_sparse,
)
from .synthesis import (
    ComposeConfig,
    NormStats,
    RadioMap3D,
    Transmitter,
    compose_multi,
    compute_dataset_stats,
    normalize_quantize,
    synth_single,
)

log = logging.getLogger("r3d.build")

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
SAMPLES_SUBDIR = "samples"

# Seed-derivation purpose tags; never reorder (would reshuffle old builds).
_SEED_ENV = 0
_SEED_TX = 1
_SEED_PHI = 2
_SEED_XI = 3
_SEED_SPARSE = 4
_SEED_SPLIT = 5


@dataclass
class SampleMeta:
    env_id: int
    tx: list[Transmitter]
    phi: list[TargetCoefficients]  # one entry, or one per tx
    xi: float
    seed: int


@dataclass
class DatasetSample:
    features: FeatureTensor
    label: RadioMap3D
    meta: SampleMeta | None = None

    def __post_init__(self):
        if self.features.dims != self.label.dims:
            raise DimsMismatch(
                f"features grid {self.features.dims.shape} != label grid {self.label.dims.shape}"
            )
        if self.label.domain != "normalized":
            raise InvalidParams(f"sample label must be normalized, got {self.label.domain!r}")


_NAME_TO_CODE = {"sparse": r3dm.CH_SPARSE, "env": r3dm.CH_ENV}


def write_sample(sample: DatasetSample, path) -> int:
    """Write one sample file; returns its CRC32C checksum."""
    channels: list[tuple[int, np.ndarray]] = []
    for name, data in sample.features.channels:
        if name.startswith("heatmap_"):
            code = r3dm.heatmap_code(int(name.split("_", 1)[1]))
        else:
            code = _NAME_TO_CODE[name]
        channels.append((code, data))
    channels.append((r3dm.CH_LABEL, sample.label.data))
    return r3dm.write_channels(path, sample.features.dims, channels)


def read_sample(path) -> DatasetSample:
    """Read and fully validate a sample file (metadata lives in the manifest)."""
    dims, raw = r3dm.read_channels(path)
    by_code = dict(raw)
    if r3dm.CH_LABEL not in by_code:
        raise MissingChannel("sample file has no label channel")
    if r3dm.CH_ENV not in by_code:
        raise MissingChannel("sample file has no environment channel")
    if r3dm.CH_BASE2D in by_code:
        raise InvariantViolation("sample files do not carry base-map channels")

    env_data = by_code[r3dm.CH_ENV]
    if not (((env_data == 0.0) | (env_data == 1.0)).all()):
        raise InvariantViolation("environment channel is not binary")
    env = OccupancyGrid(dims, env_data.astype(np.uint8))

    label_data = by_code[r3dm.CH_LABEL].astype(np.float64)
    if not np.isfinite(label_data).all():
        raise InvariantViolation("label channel contains non-finite values")
    if label_data.min() < 0.0 or label_data.max() > 1.0:
        raise InvariantViolation("label channel has values outside [0, 1]")
    label = RadioMap3D(dims, label_data, "normalized")

    heat_codes = sorted(c for c in by_code if r3dm.is_heatmap_code(c))
    expected = list(range(r3dm.CH_HEATMAP_BASE, r3dm.CH_HEATMAP_BASE + len(heat_codes)))
    if heat_codes != expected:
        raise InvariantViolation(f"heatmap channels not contiguous from 0: {heat_codes}")

    channels: list[tuple[str, np.ndarray]] = []
    for i, code in enumerate(heat_codes):
        channels.append((f"heatmap_{i}", by_code[code].astype(np.float64)))
    has_sparse = r3dm.CH_SPARSE in by_code
    if has_sparse:
        channels.append(("sparse", by_code[r3dm.CH_SPARSE].astype(np.float64)))
    channels.append(("env", env.data.astype(np.float64)))
    for name, data in channels:
        if not np.isfinite(data).all() or data.min() < 0.0 or data.max() > 1.0:
            raise InvariantViolation(f"channel {name!r} has values outside [0, 1]")

    if heat_codes and has_sparse:
        tag = "sparse_and_tx"
    elif has_sparse:
        tag = "sparse_only"
    elif heat_codes:
        tag = "tx_only"
    else:
        raise MissingChannel("sample file has neither sparse nor heatmap channels")
    return DatasetSample(FeatureTensor(dims, tag, channels), label)


# ---- build configuration ----

def _pair(v, what) -> tuple[float, float]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise InvalidParams(f"{what} must be a [lo, hi] pair, got {v!r}")
    lo, hi = float(v[0]), float(v[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise InvalidParams(f"{what} pair {v!r} must be finite with lo <= hi")
    return lo, hi


@dataclass
class BuildConfig:
    dims: GridDims
    n_envs: int = 2
    tx_sets_per_env: int = 3
    n_target_models: int = 5
    txs_per_set: int = 2
    xi_range: tuple[float, float] = (0.01, 0.10)
    seed: int = 0
    city: CityGenParams | None = None  # None: derived from dims
    base2d: Base2DParams = field(default_factory=Base2DParams)
    base2d_import_dir: str | None = None
    phi_bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "a": (-40.0, -30.0),
            "b": (-25.0, -15.0),
            "c": (-6.0, -1.0),
            "e": (0.6, 0.9),
        }
    )
    tx_power_db: tuple[float, float] = (0.0, 0.0)
    compose: ComposeConfig = field(default_factory=ComposeConfig)
    norm_policy: str = "global"
    pinned_range: tuple[float, float] = (-150.0, 10.0)
    quant_levels: int = 0
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    free_space_only: bool = True
    shared_phi_per_sample: bool = True
    sigma_xy_vox: float | None = None
    sigma_z_vox: float | None = None

    def __post_init__(self):
        for name in ("n_envs", "tx_sets_per_env", "n_target_models", "txs_per_set"):
            if getattr(self, name) < 1:
                raise InvalidParams(f"{name} must be >= 1, got {getattr(self, name)}")
        lo, hi = self.xi_range
        if not (0.0 < lo <= hi <= 1.0):
            raise InvalidParams(f"xi_range {self.xi_range} must satisfy 0 < lo <= hi <= 1")
        if (len(self.split_fractions) != 3
                or any(f < 0 for f in self.split_fractions)
                or abs(sum(self.split_fractions) - 1.0) > 1e-9):
            raise InvalidParams(
                f"split_fractions {self.split_fractions} must be 3 non-negative "
                "values summing to 1"
            )
        if set(self.phi_bounds) != {"a", "b", "c", "e"}:
            raise InvalidParams(f"phi_bounds must have keys a, b, c, e, got {set(self.phi_bounds)}")
        if self.norm_policy not in ("global", "pinned"):
            raise InvalidParams(f"norm_policy must be 'global' or 'pinned', got {self.norm_policy!r}")
        if self.norm_policy == "pinned" and not (self.pinned_range[0] < self.pinned_range[1]):
            raise InvalidParams(f"pinned_range {self.pinned_range} must be increasing")
        if self.quant_levels != 0 and not (2 <= self.quant_levels <= 65536):
            raise InvalidParams(f"quant_levels {self.quant_levels} outside {{0}} u [2, 65536]")

    @property
    def sample_count(self) -> int:
        return self.n_envs * self.tx_sets_per_env * self.n_target_models

    def city_params(self) -> CityGenParams:
        if self.city is not None:
            return self.city
        h = self.dims.height
        return CityGenParams(
            block_pitch_vox=16,
            street_width_vox=4,
            building_height_range_vox=(min(4, h), h),
            fill_probability=0.8,
        )

    def heatmap_config(self) -> HeatmapConfig:
        default = HeatmapConfig.from_dims(self.dims)
        return HeatmapConfig(
            self.sigma_xy_vox if self.sigma_xy_vox is not None else default.sigma_xy_vox,
            self.sigma_z_vox if self.sigma_z_vox is not None else default.sigma_z_vox,
        )

    def coefficient_space(self) -> CoefficientSpace:
        lo = np.array([self.phi_bounds[k][0] for k in "abce"])
        hi = np.array([self.phi_bounds[k][1] for k in "abce"])
        return CoefficientSpace(lo, hi)

    @classmethod
    def from_dict(cls, d: dict) -> "BuildConfig":
        d = dict(d)
        known = {
            "dims", "n_envs", "tx_sets_per_env", "n_target_models", "txs_per_set",
            "xi_range", "seed", "city", "base2d", "base2d_import_dir", "phi_bounds",
            "tx_power_db", "compose", "norm_policy", "pinned_range", "quant_levels",
            "split_fractions", "free_space_only", "shared_phi_per_sample",
            "sigma_xy_vox", "sigma_z_vox",
        }
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown build-config keys: {sorted(unknown)}")
        if "dims" not in d:
            raise InvalidParams("build config needs 'dims'")
        dd = d.pop("dims")
        try:
            dims = GridDims(
                int(dd["width"]), int(dd["depth"]), int(dd["height"]),
                float(dd.get("resolution_m", 1.0)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidParams(f"bad dims block {dd!r}: {exc}") from None
        kw: dict = {"dims": dims}
        if "city" in d:
            c = d.pop("city")
            kw["city"] = CityGenParams(
                int(c.get("block_pitch_vox", 16)),
                int(c.get("street_width_vox", 4)),
                tuple(
                    int(x) for x in c.get(
                        "building_height_range_vox", (min(4, dims.height), dims.height)
                    )
                ),
                float(c.get("fill_probability", 0.8)),
            )
        if "base2d" in d:
            b = d.pop("base2d")
            kw["base2d"] = Base2DParams(
                float(b.get("a0_db", -40.0)),
                float(b.get("b0_db_per_decade", -20.0)),
                float(b.get("wall_loss_db", 6.0)),
                float(b.get("floor_db", -150.0)),
            )
        if "compose" in d:
            c = d.pop("compose")
            nf = c.get("noise_floor_db")
            kw["compose"] = ComposeConfig(
                None if nf is None else float(nf),
                float(c.get("clamp_min_db", -150.0)),
                float(c.get("clamp_max_db", 10.0)),
            )
        if "phi_bounds" in d:
            pb = d.pop("phi_bounds")
            kw["phi_bounds"] = {k: _pair(v, f"phi_bounds[{k}]") for k, v in pb.items()}
        for key in ("xi_range", "tx_power_db", "pinned_range"):
            if key in d:
                kw[key] = _pair(d.pop(key), key)
        if "split_fractions" in d:
            sf = d.pop("split_fractions")
            if not (isinstance(sf, (list, tuple)) and len(sf) == 3):
                raise InvalidParams(f"split_fractions must be a 3-list, got {sf!r}")
            kw["split_fractions"] = tuple(float(x) for x in sf)
        for key in ("n_envs", "tx_sets_per_env", "n_target_models", "txs_per_set",
                    "seed", "quant_levels"):
            if key in d:
                kw[key] = int(d.pop(key))
        for key in ("free_space_only", "shared_phi_per_sample"):
            if key in d:
                kw[key] = bool(d.pop(key))
        for key in ("sigma_xy_vox", "sigma_z_vox"):
            if key in d and d[key] is not None:
                kw[key] = float(d.pop(key))
            else:
                d.pop(key, None)
        if "norm_policy" in d:
            kw["norm_policy"] = str(d.pop("norm_policy"))
        if "base2d_import_dir" in d:
            v = d.pop("base2d_import_dir")
            kw["base2d_import_dir"] = None if v is None else str(v)
        return cls(**kw)

    @classmethod
    def from_json(cls, path) -> "BuildConfig":
        with open(path) as f:
            try:
                d = json.load(f)
            except json.JSONDecodeError as exc:
                raise InvalidParams(f"build config is not valid JSON: {exc}") from None
        return cls.from_dict(d)


# ---- manifest ----

@dataclass
class SampleRecord:
    file: str  # path relative to the dataset root
    env_id: int
    tx: list[dict]  # {"x", "y", "z", "power_db"}
    phi: list[dict]  # {"a", "b", "c", "e"}; one entry, or one per tx
    xi: float
    checksum: str  # CRC32C, 8 lowercase hex digits


@dataclass
class Manifest:
    format_version: int
    dims: GridDims
    sample_count: int
    build_seed: int
    norm: NormStats
    split: dict[str, list[int]]  # split name -> env ids
    records: list[SampleRecord]

    def records_for_split(self, name: str) -> list[SampleRecord]:
        if name not in self.split:
            raise InvalidParams(f"unknown split {name!r}")
        ids = set(self.split[name])
        return [r for r in self.records if r.env_id in ids]

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "dims": {
                "width": self.dims.width,
                "depth": self.dims.depth,
                "height": self.dims.height,
                "resolution_m": self.dims.resolution_m,
            },
            "sample_count": self.sample_count,
            "build_seed": self.build_seed,
            "norm": {
                "vmin_db": self.norm.vmin_db,
                "vmax_db": self.norm.vmax_db,
                "quant_levels": self.norm.quant_levels,
            },
            "split": {k: list(v) for k, v in self.split.items()},
            "records": [
                {
                    "file": r.file,
                    "env_id": r.env_id,
                    "tx": r.tx,
                    "phi": r.phi,
                    "xi": r.xi,
                    "checksum": r.checksum,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        dd = d["dims"]
        return cls(
            format_version=int(d["format_version"]),
            dims=GridDims(
                int(dd["width"]), int(dd["depth"]), int(dd["height"]),
                float(dd["resolution_m"]),
            ),
            sample_count=int(d["sample_count"]),
            build_seed=int(d["build_seed"]),
            norm=NormStats(
                float(d["norm"]["vmin_db"]),
                float(d["norm"]["vmax_db"]),
                int(d["norm"]["quant_levels"]),
            ),
            split={k: [int(i) for i in v] for k, v in d["split"].items()},
            records=[
                SampleRecord(
                    file=r["file"],
                    env_id=int(r["env_id"]),
                    tx=r["tx"],
                    phi=r["phi"],
                    xi=float(r["xi"]),
                    checksum=r["checksum"],
                )
                for r in d["records"]
            ],
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Manifest":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def split_dataset(
    manifest: Manifest, fractions: tuple[float, float, float], seed: int
) -> Manifest:
    """Reassign the env-level split: floor counts per fraction, remainder to train.

    Environments (not samples) are shuffled and partitioned, so no environment
    appears in two splits. Returns a new manifest; the input is untouched.
    """
    from .errors import BadFractions

    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise BadFractions(f"fractions must be 3 non-negative values, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must sum to 1, got {sum(fractions)}")
    env_ids = sorted({r.env_id for r in manifest.records})
    n = len(env_ids)
    n_val = int(np.floor(fractions[1] * n))
    n_test = int(np.floor(fractions[2] * n))
    n_train = n - n_val - n_test  # floor(train) plus any remainder
    rng = np.random.default_rng(seed)
    order = [env_ids[i] for i in rng.permutation(n)]
    split = {
        "train": sorted(order[:n_train]),
        "val": sorted(order[n_train:n_train + n_val]),
        "test": sorted(order[n_train + n_val:]),
    }
    return Manifest(
        manifest.format_version, manifest.dims, manifest.sample_count,
        manifest.build_seed, manifest.norm, split, list(manifest.records),
    )


# ---- build pipeline ----

def _seed_for(build_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((build_seed,) + key)


def _int_seed(build_seed: int, *key: int) -> int:
    return int(_seed_for(build_seed, *key).generate_state(1)[0])


def _place_transmitters(env: OccupancyGrid, cfg: BuildConfig, env_id: int, set_id: int
                        ) -> list[Transmitter]:
    """K distinct free voxels with z in [2, H-1] (clamped for flat grids)."""
    dims = env.dims
    z_lo = min(2, dims.height - 1)
    free = np.argwhere(env.free_mask[:, :, z_lo:])
    if free.shape[0] < cfg.txs_per_set:
        raise InvalidParams(
            f"env {env_id}: only {free.shape[0]} free voxels at z >= {z_lo}, "
            f"need {cfg.txs_per_set}"
        )
    rng = np.random.default_rng(_seed_for(cfg.seed, _SEED_TX, env_id, set_id))
    picks = rng.choice(free.shape[0], size=cfg.txs_per_set, replace=False)
    powers = rng.uniform(cfg.tx_power_db[0], cfg.tx_power_db[1], size=cfg.txs_per_set)
    txs = []
    for row, p in zip(free[picks], powers):
        ix, iy, iz = int(row[0]), int(row[1]), int(row[2]) + z_lo
        txs.append(Transmitter(dims.center_of(ix, iy, iz), float(p)))
    return txs


def _phis_for_sample(phis: list[TargetCoefficients], cfg: BuildConfig, ell: int
                     ) -> list[TargetCoefficients]:
    if cfg.shared_phi_per_sample:
        return [phis[ell]]
    k = cfg.txs_per_set
    return phis[ell * k:(ell + 1) * k]


def _base_maps(env: OccupancyGrid, txs: list[Transmitter], cfg: BuildConfig,
               env_id: int, set_id: int) -> list[BaseMap3D]:
    if cfg.base2d_import_dir is None:
        return [stack_slices(env, tx, cfg.base2d) for tx in txs]
    root = Path(cfg.base2d_import_dir)
    return [
        import_slices(root / f"env{env_id:03d}_set{set_id:02d}_tx{k}.r3dm", env.dims)
        for k in range(len(txs))
    ]


def _labels_for_set(env: OccupancyGrid, txs: list[Transmitter],
                    phis: list[TargetCoefficients], cfg: BuildConfig,
                    env_id: int, set_id: int) -> list[np.ndarray]:
    """dB label volumes for every target model of one (env, tx set)."""
    bases = _base_maps(env, txs, cfg, env_id, set_id)
    labels = []
    for ell in range(cfg.n_target_models):
        sample_phis = _phis_for_sample(phis, cfg, ell)
        maps = []
        for k, tx in enumerate(txs):
            phi = sample_phis[0] if len(sample_phis) == 1 else sample_phis[k]
            maps.append(synth_single(env, tx, phi, bases[k], cfg.compose.clamp_min_db))
        labels.append(compose_multi(maps, cfg.compose).data)
    return labels


def _set_task(args):
    env, txs, phis, cfg, env_id, set_id = args
    return env_id, set_id, _labels_for_set(env, txs, phis, cfg, env_id, set_id)


def build_dataset(cfg: BuildConfig, out_dir, workers: int = 1) -> Manifest:
    """Generate, label, encode, and write the full dataset; returns the manifest.

    Two passes: the first synthesizes all dB labels (parallel across
    (env, tx set) when workers > 1) and fixes the normalization range; the
    second normalizes, samples, encodes, and writes each file.
    """
    out = Path(out_dir)
    (out / SAMPLES_SUBDIR).mkdir(parents=True, exist_ok=True)
    dims = cfg.dims
    city = cfg.city_params()
    heat_cfg = cfg.heatmap_config()

    log.info("generating %d environments at %s", cfg.n_envs, dims.shape)
    envs = [
        generate_city(dims, city, _int_seed(cfg.seed, _SEED_ENV, e))
        for e in range(cfg.n_envs)
    ]
    tx_sets = {
        (e, s): _place_transmitters(envs[e], cfg, e, s)
        for e in range(cfg.n_envs)
        for s in range(cfg.tx_sets_per_env)
    }
    n_phis = cfg.n_target_models * (1 if cfg.shared_phi_per_sample else cfg.txs_per_set)
    phis = oversample(cfg.coefficient_space(), n_phis, _int_seed(cfg.seed, _SEED_PHI))

    tasks = [
        (envs[e], tx_sets[(e, s)], phis, cfg, e, s)
        for e in range(cfg.n_envs)
        for s in range(cfg.tx_sets_per_env)
    ]
    labels: dict[tuple[int, int], list[np.ndarray]] = {}
    if workers > 1:
        log.info("synthesizing labels for %d tx sets on %d workers", len(tasks), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for e, s, lab in pool.map(_set_task, tasks):
                labels[(e, s)] = lab
    else:
        log.info("synthesizing labels for %d tx sets", len(tasks))
        for t in tasks:
            e, s, lab = _set_task(t)
            labels[(e, s)] = lab

    if cfg.norm_policy == "pinned":
        stats = NormStats(cfg.pinned_range[0], cfg.pinned_range[1], cfg.quant_levels)
    else:
        stats = compute_dataset_stats(
            (RadioMap3D(dims, lab, "db")
             for key in sorted(labels) for lab in labels[key]),
            cfg.quant_levels,
        )
    log.info("normalization range [%.3f, %.3f] dB", stats.vmin_db, stats.vmax_db)

    records: list[SampleRecord] = []
    idx = 0
    try:
        for e in range(cfg.n_envs):
            for s in range(cfg.tx_sets_per_env):
                txs = tx_sets[(e, s)]
                heat = encode_heatmap(
                    [(tx.q, tx.power_linear) for tx in txs], dims, heat_cfg
                )
                for ell in range(cfg.n_target_models):
                    label_db = RadioMap3D(dims, labels[(e, s)][ell], "db")
                    label = normalize_quantize(label_db, stats)
                    xi_rng = np.random.default_rng(_seed_for(cfg.seed, _SEED_XI, idx))
                    xi = float(xi_rng.uniform(cfg.xi_range[0], cfg.xi_range[1]))
                    sparse_seed = _int_seed(cfg.seed, _SEED_SPARSE, idx)
                    sparse = sample_sparse(
                        label, envs[e],
                        SamplerConfig(xi, cfg.free_space_only, seed=sparse_seed),
                    )
                    features = assemble_features("sparse_and_tx", envs[e], sparse, heat)
                    sample_phis = _phis_for_sample(phis, cfg, ell)
                    meta = SampleMeta(e, txs, sample_phis, xi, sparse_seed)
                    rel = f"{SAMPLES_SUBDIR}/sample_{idx:05d}.r3dm"
                    crc = write_sample(DatasetSample(features, label, meta), out / rel)
                    records.append(SampleRecord(
                        file=rel,
                        env_id=e,
                        tx=[{"x": t.q.x, "y": t.q.y, "z": t.q.z, "power_db": t.power_db}
                            for t in txs],
                        phi=[{"a": p.a, "b": p.b, "c": p.c, "e": p.e} for p in sample_phis],
                        xi=xi,
                        checksum=f"{crc:08x}",
                    ))
                    idx += 1
    except BaseException:
        # never leave a half-written tree that looks like a dataset
        for rec in records:
            (out / rec.file).unlink(missing_ok=True)
        raise
    log.info("wrote %d samples", idx)

    manifest = Manifest(
        MANIFEST_VERSION, dims, idx, cfg.seed, stats, {}, records,
    )
    manifest = split_dataset(manifest, cfg.split_fractions, _int_seed(cfg.seed, _SEED_SPLIT))
    manifest.save(out / MANIFEST_NAME)
    return manifest
