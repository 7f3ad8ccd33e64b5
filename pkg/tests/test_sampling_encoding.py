import math

import numpy as np
import pytest

from r3d.env import OccupancyGrid
from r3d.errors import (
    DimsMismatch,
    DomainMismatch,
    EmptyCandidates,
    EmptyInput,
    InvalidParams,
    MissingChannel,
    NonPositivePower,
    OutOfBounds,
)
from r3d.grid import GridDims, Point3
from r3d.sampling_encoding import (
    HeatmapConfig,
    SamplerConfig,
    SparseMap,
    assemble_features,
    encode_heatmap,
    sample_sparse,
)
from r3d.synthesis import RadioMap3D

EXP_HALF = 0.6065306597126334  # exp(-0.5), frozen


def normalized_label(dims, seed=0):
    rng = np.random.default_rng(seed)
    # keep values strictly positive so zeros mean "not sampled"
    return RadioMap3D(dims, rng.uniform(0.05, 1.0, dims.shape), "normalized")


def free_env(dims):
    return OccupancyGrid(dims, np.zeros(dims.shape, dtype=np.uint8))


def test_full_rate_copies_label(dims8):
    label = normalized_label(dims8)
    out = sample_sparse(label, free_env(dims8), SamplerConfig(1.0, False, seed=1))
    assert (out.data == label.data).all()
    assert out.n_samples == dims8.n_voxels


def test_one_percent_of_32768_is_328():
    dims = GridDims(64, 64, 8)
    label = normalized_label(dims, seed=2)
    out = sample_sparse(label, free_env(dims), SamplerConfig(0.01, False, seed=3))
    assert out.n_samples == 328
    assert np.count_nonzero(out.data) == 328


def test_sampled_values_match_label_exactly(dims8):
    label = normalized_label(dims8, seed=4)
    out = sample_sparse(label, free_env(dims8), SamplerConfig(0.1, False, seed=5))
    for (i, j, k) in out.indices:
        assert out.data[i, j, k] == label.data[i, j, k]
    mask = np.zeros(dims8.shape, dtype=bool)
    mask[tuple(out.indices.T)] = True
    assert (out.data[~mask] == 0.0).all()


def test_free_space_only_avoids_buildings(dims8):
    occ = np.zeros(dims8.shape, dtype=np.uint8)
    occ[:8, :, :] = 1
    env = OccupancyGrid(dims8, occ)
    label = normalized_label(dims8, seed=6)
    out = sample_sparse(label, env, SamplerConfig(0.25, True, seed=7))
    assert out.n_samples == round(0.25 * (dims8.n_voxels // 2))
    assert (out.indices[:, 0] >= 8).all()


def test_sampling_deterministic_per_seed(dims8):
    label = normalized_label(dims8, seed=8)
    env = free_env(dims8)
    a = sample_sparse(label, env, SamplerConfig(0.05, False, seed=9))
    b = sample_sparse(label, env, SamplerConfig(0.05, False, seed=9))
    c = sample_sparse(label, env, SamplerConfig(0.05, False, seed=10))
    assert (a.indices == b.indices).all()
    assert (a.data == b.data).all()
    assert a.indices.shape == c.indices.shape and (a.indices != c.indices).any()


def test_sampling_validation(dims8):
    label = normalized_label(dims8)
    with pytest.raises(InvalidParams):
        SamplerConfig(0.0)
    with pytest.raises(InvalidParams):
        SamplerConfig(1.5)
    small = GridDims(8, 8, 8)
    with pytest.raises(DimsMismatch):
        sample_sparse(label, free_env(small), SamplerConfig(0.1))
    db_map = RadioMap3D(dims8, np.full(dims8.shape, -60.0), "db")
    with pytest.raises(DomainMismatch):
        sample_sparse(db_map, free_env(dims8), SamplerConfig(0.1))
    solid = OccupancyGrid(dims8, np.ones(dims8.shape, dtype=np.uint8))
    with pytest.raises(EmptyCandidates):
        sample_sparse(label, solid, SamplerConfig(0.1, True))


def test_heatmap_single_peak_is_one():
    dims = GridDims(32, 32, 16)
    cfg = HeatmapConfig(2.0, 3.0)
    out = encode_heatmap([(Point3(16.5, 16.5, 8.5), 1.0)], dims, cfg)
    assert out.shape == (1, 32, 32, 16)
    assert out.max() == 1.0
    assert out[0, 16, 16, 8] == 1.0
    assert (out > 0.0).all()


def test_heatmap_vertical_sigma_ratio():
    dims = GridDims(32, 32, 16)
    cfg = HeatmapConfig(sigma_xy_vox=2.0, sigma_z_vox=3.0)
    out = encode_heatmap([(Point3(16.5, 16.5, 5.5), 2.0)], dims, cfg)
    peak = out[0, 16, 16, 5]
    at_sigma = out[0, 16, 16, 8]  # dz = 3 voxels = sigma_z
    assert at_sigma / peak == pytest.approx(EXP_HALF, abs=1e-9)


def test_heatmap_horizontal_sigma_ratio():
    dims = GridDims(32, 32, 16)
    cfg = HeatmapConfig(sigma_xy_vox=4.0, sigma_z_vox=2.0)
    out = encode_heatmap([(Point3(12.5, 16.5, 8.5), 1.0)], dims, cfg)
    peak = out[0, 12, 16, 8]
    assert out[0, 16, 16, 8] / peak == pytest.approx(EXP_HALF, abs=1e-9)
    assert out[0, 12, 20, 8] / peak == pytest.approx(EXP_HALF, abs=1e-9)


def test_heatmap_power_ratio_normalization():
    dims = GridDims(32, 32, 16)
    cfg = HeatmapConfig(2.0, 2.0)
    txs = [(Point3(8.5, 8.5, 8.5), 2.0), (Point3(24.5, 24.5, 8.5), 1.0)]
    out = encode_heatmap(txs, dims, cfg)
    assert out.shape[0] == 2
    assert out[0, 8, 8, 8] == pytest.approx(1.0, abs=1e-12)
    assert out[1, 24, 24, 8] == pytest.approx(0.5, abs=1e-12)


def test_heatmap_separability():
    dims = GridDims(24, 24, 12)
    cfg = HeatmapConfig(3.0, 2.0)
    out = encode_heatmap([(Point3(12.5, 12.5, 6.5), 1.0)], dims, cfg)[0]
    g = out / out[12, 12, 6]
    rng = np.random.default_rng(11)
    for _ in range(50):
        i = int(rng.integers(0, 24))
        j = int(rng.integers(0, 24))
        k = int(rng.integers(0, 12))
        want = g[i, 12, 6] * g[12, j, 6] * g[12, 12, k]
        assert g[i, j, k] == pytest.approx(want, rel=1e-9)


def test_heatmap_symmetry():
    dims = GridDims(25, 25, 13)
    cfg = HeatmapConfig(2.5, 1.5)
    out = encode_heatmap([(Point3(12.5, 12.5, 6.5), 1.0)], dims, cfg)[0]
    assert np.allclose(out, out[::-1, :, :], atol=1e-12)
    assert np.allclose(out, out[:, ::-1, :], atol=1e-12)
    assert np.allclose(out, out[:, :, ::-1], atol=1e-12)
    assert np.allclose(out, out.transpose(1, 0, 2), atol=1e-12)


def test_heatmap_validation():
    dims = GridDims(16, 16, 8)
    cfg = HeatmapConfig(2.0, 2.0)
    with pytest.raises(EmptyInput):
        encode_heatmap([], dims, cfg)
    with pytest.raises(OutOfBounds):
        encode_heatmap([(Point3(17.0, 4.0, 4.0), 1.0)], dims, cfg)
    with pytest.raises(NonPositivePower):
        encode_heatmap([(Point3(4.5, 4.5, 4.5), 0.0)], dims, cfg)
    with pytest.raises(InvalidParams):
        HeatmapConfig(0.0, 2.0)
    with pytest.raises(InvalidParams):
        HeatmapConfig(2.0, -1.0)


def test_heatmap_default_sigmas_from_dims():
    cfg = HeatmapConfig.from_dims(GridDims(64, 40, 8))
    assert cfg.sigma_xy_vox == pytest.approx(0.05 * 8)
    assert cfg.sigma_z_vox == pytest.approx(0.1 * 40)


def make_parts(dims, n_tx=2):
    env = free_env(dims)
    label = normalized_label(dims, seed=12)
    sparse = sample_sparse(label, env, SamplerConfig(0.05, False, seed=13))
    txs = [
        (Point3(4.5, 4.5, 2.5), 1.0),
        (Point3(10.5, 12.5, 5.5), 0.5),
    ][:n_tx]
    heat = encode_heatmap(txs, dims, HeatmapConfig(2.0, 2.0))
    return env, sparse, heat


def test_assemble_sparse_and_tx_order(dims8):
    env, sparse, heat = make_parts(dims8)
    ft = assemble_features("sparse_and_tx", env, sparse=sparse, heatmaps=heat)
    assert ft.channel_names() == ["heatmap_0", "heatmap_1", "sparse", "env"]
    stacked = ft.stacked()
    assert stacked.shape == (4, 16, 16, 8)
    assert (stacked[0] == heat[0]).all()
    assert (stacked[2] == sparse.data).all()
    assert (stacked[3] == env.data).all()


def test_assemble_tx_only_ignores_sparse(dims8):
    env, sparse, heat = make_parts(dims8)
    ft = assemble_features("tx_only", env, sparse=sparse, heatmaps=heat)
    assert ft.channel_names() == ["heatmap_0", "heatmap_1", "env"]


def test_assemble_sparse_only(dims8):
    env, sparse, _ = make_parts(dims8)
    ft = assemble_features("sparse_only", env, sparse=sparse)
    assert ft.channel_names() == ["sparse", "env"]


def test_assemble_missing_parts_rejected(dims8):
    env, sparse, heat = make_parts(dims8)
    with pytest.raises(MissingChannel):
        assemble_features("sparse_only", env)
    with pytest.raises(MissingChannel):
        assemble_features("tx_only", env)
    with pytest.raises(MissingChannel):
        assemble_features("sparse_and_tx", env, sparse=sparse)
    with pytest.raises(InvalidParams):
        assemble_features("bogus", env, sparse=sparse, heatmaps=heat)


def test_assemble_dims_mismatch(dims8):
    env, sparse, heat = make_parts(dims8)
    other = GridDims(8, 8, 8)
    env_small = free_env(other)
    with pytest.raises(DimsMismatch):
        assemble_features("sparse_and_tx", env_small, sparse=sparse, heatmaps=heat)


def test_sparse_map_indices_sorted(dims8):
    label = normalized_label(dims8, seed=14)
    out = sample_sparse(label, free_env(dims8), SamplerConfig(0.2, False, seed=15))
    flat = np.ravel_multi_index(tuple(out.indices.T), dims8.shape)
    assert (np.diff(flat) > 0).all()
