import numpy as np
import pytest

from r3d.env import CityGenParams, OccupancyGrid, generate_city
from r3d.errors import DimsMismatch, InvalidParams, NonFiniteValue, OutOfBounds
from r3d.grid import GridDims, Point3
from r3d.propagate2d import (
    Base2DParams,
    BaseMap3D,
    count_wall_crossings,
    export_slices,
    import_slices,
    predict_slice,
    stack_slices,
    wall_crossing_map,
)
from r3d.synthesis import Transmitter


def crossings_by_dense_walk(env2d, p_from, p_to, steps=200_000):
    """Oracle: march the segment at very fine resolution and count entered
    wall voxels, excluding the endpoints' own voxels.  Robust for segments
    that do not pass exactly through voxel corners."""
    x0, y0 = p_from
    x1, y1 = p_to
    t = np.linspace(0.0, 1.0, steps)
    xs = np.clip((x0 + (x1 - x0) * t).astype(int), 0, env2d.shape[0] - 1)
    ys = np.clip((y0 + (y1 - y0) * t).astype(int), 0, env2d.shape[1] - 1)
    cells = set(zip(xs.tolist(), ys.tolist()))
    cells.discard((int(x0), int(y0)))
    cells.discard((int(x1), int(y1)))
    return sum(int(env2d[c]) for c in cells)


def test_perpendicular_wall_counts_thickness():
    env = np.zeros((16, 16), dtype=np.uint8)
    env[6:9, :] = 1  # 3 voxels thick
    n = count_wall_crossings(env, (2.5, 8.0), (12.5, 8.0))
    assert n == 3


def test_two_walls_example():
    env = np.zeros((20, 8), dtype=np.uint8)
    env[5, :] = 1
    env[11, :] = 1
    assert count_wall_crossings(env, (1.5, 4.5), (18.5, 4.5)) == 2


def test_exact_corner_counts_both_side_voxels():
    # segment through the lattice corner (8,8) of a 2x2 occupied quad:
    # both corner-adjacent side voxels count, plus the diagonal ones
    env = np.zeros((16, 16), dtype=np.uint8)
    env[7, 8] = 1
    env[8, 7] = 1
    n = count_wall_crossings(env, (4.0, 4.0), (12.0, 12.0))
    assert n == 2


def test_endpoint_voxels_excluded():
    env = np.ones((8, 8), dtype=np.uint8)
    # tx and rx inside walls: neither endpoint voxel is billed
    n = count_wall_crossings(env, (0.5, 0.5), (3.5, 0.5))
    assert n == 2  # voxels (1,0) and (2,0) only


def test_same_voxel_is_zero():
    env = np.ones((4, 4), dtype=np.uint8)
    assert count_wall_crossings(env, (1.2, 1.2), (1.8, 1.8)) == 0


def test_matches_dense_walk_oracle_random():
    rng = np.random.default_rng(42)
    env = (rng.random((24, 24)) < 0.35).astype(np.uint8)
    for _ in range(60):
        a = rng.uniform(0.1, 23.9, 2)
        b = rng.uniform(0.1, 23.9, 2)
        # keep away from exact corner hits; the walk oracle can't see those
        a = np.round(a, 3) + 1e-4
        b = np.round(b, 3) + 1e-4
        want = crossings_by_dense_walk(env, a, b)
        got = count_wall_crossings(env, tuple(a), tuple(b))
        assert got == want, (a, b, got, want)


def test_map_matches_scalar_op(city_env):
    env2d = city_env.data[:, :, 1]
    tx = (10.3, 21.7)
    grid = wall_crossing_map(env2d, tx, resolution_m=1.0)
    rng = np.random.default_rng(9)
    for _ in range(40):
        i = int(rng.integers(0, 32))
        j = int(rng.integers(0, 32))
        want = count_wall_crossings(env2d, tx, (i + 0.5, j + 0.5))
        assert grid[i, j] == want


def test_out_of_bounds_rejected():
    env = np.zeros((8, 8), dtype=np.uint8)
    with pytest.raises(OutOfBounds):
        count_wall_crossings(env, (-1.0, 2.0), (3.0, 3.0))
    with pytest.raises(OutOfBounds):
        count_wall_crossings(env, (1.0, 2.0), (8.5, 3.0))


def test_resolution_scales_coordinates():
    env = np.zeros((16, 16), dtype=np.uint8)
    env[6:9, :] = 1
    # 2 m voxels: the same metric segment now spans half the voxel range
    n = count_wall_crossings(env, (5.0, 16.0), (25.0, 16.0), resolution_m=2.0)
    assert n == 3


def test_predict_slice_freespace_value():
    env = np.zeros((16, 16), dtype=np.uint8)
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    out = predict_slice(env, (4.5, 4.5), 0.0, params)
    # one voxel away along x: d2 = 1 -> log term vanishes
    assert out[5, 4] == pytest.approx(-40.0, abs=1e-12)
    # ten voxels away: another -20 dB
    assert out[14, 4] == pytest.approx(-60.0, abs=1e-9)


def test_predict_slice_two_walls_example():
    # -40 at 1 m, -20/decade, 6 dB per wall, two walls, d2 = 10
    env = np.zeros((20, 8), dtype=np.uint8)
    env[5, :] = 1
    env[11, :] = 1
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    out = predict_slice(env, (2.5, 4.5), 0.0, params)
    assert out[12, 4] == pytest.approx(-40.0 - 20.0 - 12.0, abs=1e-9)


def test_predict_slice_near_field_clamp():
    env = np.zeros((8, 8), dtype=np.uint8)
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    out = predict_slice(env, (3.5, 3.5), 0.0, params)
    # tx voxel itself: d2 clamped to half a voxel, never +inf
    assert np.isfinite(out).all()
    assert out[3, 3] == pytest.approx(-40.0 - 20.0 * np.log10(0.5), abs=1e-9)


def test_predict_slice_floor_applies():
    env = np.zeros((64, 4), dtype=np.uint8)
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0,
                          wall_loss_db=6.0, floor_db=-60.0)
    out = predict_slice(env, (0.5, 0.5), 0.0, params)
    assert out.min() >= -60.0


def test_monotone_in_walls(city_env):
    env2d = city_env.data[:, :, 0]
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    with_walls = predict_slice(env2d, (15.5, 15.5), 0.0, params)
    no_walls = predict_slice(np.zeros_like(env2d), (15.5, 15.5), 0.0, params)
    assert (with_walls <= no_walls + 1e-12).all()


def test_stack_slices_layers_are_independent_predictions(city_env):
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    tx = Transmitter(Point3(10.5, 12.5, 3.5), 0.0)
    base = stack_slices(city_env, tx, params)
    assert base.data.shape == city_env.dims.shape
    for z in (0, 3, 7):
        want = predict_slice(city_env.data[:, :, z], (10.5, 12.5), 0.0, params)
        assert np.allclose(base.data[:, :, z], want, atol=0, rtol=0)


def test_base_params_validation():
    with pytest.raises(InvalidParams):
        Base2DParams(b0_db_per_decade=1.0)  # must lose power with distance
    with pytest.raises(InvalidParams):
        Base2DParams(wall_loss_db=-2.0)


def test_slice_io_roundtrip(tmp_path, city_env):
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    tx = Transmitter(Point3(8.5, 8.5, 2.5), 0.0)
    base = stack_slices(city_env, tx, params)
    path = tmp_path / "base.r3dm"
    export_slices(path, base)
    back = import_slices(path)
    assert back.dims == base.dims
    assert (back.data == base.data.astype(np.float32)).all()


def test_import_slices_rejects_wrong_dims(tmp_path, city_env):
    params = Base2DParams(a0_db=-40.0, b0_db_per_decade=-20.0, wall_loss_db=6.0)
    base = stack_slices(city_env, Transmitter(Point3(8.5, 8.5, 2.5), 0.0), params)
    path = tmp_path / "base.r3dm"
    export_slices(path, base)
    with pytest.raises(DimsMismatch):
        import_slices(path, expect_dims=GridDims(8, 8, 8))


def test_basemap_rejects_nonfinite(dims8):
    data = np.zeros(dims8.shape)
    data[0, 0, 0] = np.inf
    with pytest.raises(NonFiniteValue):
        BaseMap3D(dims8, data)
