"""Command-line surface: one ``r3d`` entry point with a subcommand per stage.

Exit codes are uniform: 0 success, 2 bad usage or configuration, 3 runtime
failure while executing a valid request. ``r3d build`` honors the R3D_SEED
environment variable as a seed override.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import dataset_io, env as env_mod, metrics as metrics_mod, propagate2d, r3dm
from .channel_model import TargetCoefficients
from .errors import InvalidParams, R3DError
from .fitting import MaskedMeasurements, fit_coefficients
from .grid import GridDims, Point3
from .sampling_encoding import HeatmapConfig, SamplerConfig, sample_sparse
from .synthesis import ComposeConfig, RadioMap3D, Transmitter, compose_multi, synth_single
from .sampling_encoding import encode_heatmap

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_dims(text: str, resolution: float) -> GridDims:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise InvalidParams(f"dims must look like 64x64x8, got {text!r}")
    w, d, h = (int(p) for p in parts)
    return GridDims(w, d, h, resolution)


def _parse_tx(text: str) -> Transmitter:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidParams(f"tx must be x,y,z,power_db, got {text!r}")
    x, y, z, p = (float(v) for v in parts)
    return Transmitter(Point3(x, y, z), p)


def _parse_point(text: str) -> Point3:
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidParams(f"point must be x,y,z, got {text!r}")
    return Point3(*(float(v) for v in parts))


def _load_phi(path) -> TargetCoefficients:
    with open(path) as f:
        d = json.load(f)
    try:
        return TargetCoefficients(float(d["a"]), float(d["b"]), float(d["c"]), float(d["e"]))
    except KeyError as exc:
        raise InvalidParams(f"phi file {path} missing key {exc}") from None


# ---- subcommand handlers ----

def _cmd_gen_env(args) -> int:
    dims = _parse_dims(args.dims, args.res)
    if args.params:
        with open(args.params) as f:
            doc = json.load(f)
        known = {"block_pitch_vox", "street_width_vox",
                 "building_height_range_vox", "fill_probability"}
        extra = set(doc) - known
        if extra:
            raise InvalidParams(f"unknown city param keys: {sorted(extra)}")
        if "building_height_range_vox" in doc:
            doc["building_height_range_vox"] = tuple(doc["building_height_range_vox"])
        params = env_mod.CityGenParams(**doc)
    else:
        hr = tuple(int(v) for v in args.height_range.split(","))
        if len(hr) != 2:
            raise InvalidParams(f"height range must be LO,HI, got {args.height_range!r}")
        params = env_mod.CityGenParams(args.pitch, args.street, hr, args.fill)
    grid = env_mod.generate_city(dims, params, args.seed)
    env_mod.save_occupancy(args.out, grid)
    print(f"wrote {args.out}: {grid.occupied_count()} occupied of {dims.n_voxels} voxels")
    return EXIT_OK


def _cmd_base(args) -> int:
    grid = env_mod.load_occupancy(args.env)
    if args.from_slices:
        base = propagate2d.import_slices(args.from_slices, grid.dims)
    else:
        if args.tx is None:
            raise InvalidParams("base needs either --tx or --from-slices")
        tx = _parse_tx(args.tx)
        params = propagate2d.Base2DParams(args.a0, args.b0, args.wall_loss, args.floor)
        base = propagate2d.stack_slices(grid, tx, params)
    propagate2d.export_slices(args.out, base)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    base = propagate2d.import_slices(args.base)
    points, values = [], []
    with open(args.measurements, newline="") as f:
        reader = csv.DictReader(f)
        need = {"x", "y", "z", "rss_db"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise InvalidParams(
                f"measurement CSV needs header columns {sorted(need)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            points.append([float(row["x"]), float(row["y"]), float(row["z"])])
            values.append(float(row["rss_db"]))
    meas = MaskedMeasurements(np.array(points), np.array(values), _parse_point(args.tx))
    result = fit_coefficients(meas, base)
    out = {
        "a": result.phi.a, "b": result.phi.b, "c": result.phi.c, "e": result.phi.e,
        "residual_rmse_db": result.residual_rmse_db,
    }
    with open(args.out, "w") as f:
        json.dump(out, f, indent=2)
        f.write("\n")
    print(f"wrote {args.out}: residual {result.residual_rmse_db:.3f} dB over {len(meas)} points")
    return EXIT_OK


def _cmd_synth(args) -> int:
    grid = env_mod.load_occupancy(args.env)
    phi = _load_phi(args.phi)
    txs = [_parse_tx(t) for t in args.tx]
    base_paths = args.base
    if len(base_paths) == 1 and len(txs) > 1:
        base_paths = base_paths * len(txs)
    if len(base_paths) != len(txs):
        raise InvalidParams(f"{len(txs)} transmitters but {len(base_paths)} base maps")
    cfg = ComposeConfig(args.noise_floor, args.clamp_min, args.clamp_max)
    maps = []
    for tx, bp in zip(txs, base_paths):
        base = propagate2d.import_slices(bp, grid.dims)
        maps.append(synth_single(grid, tx, phi, base, cfg.clamp_min_db))
    out_map = compose_multi(maps, cfg)
    data = out_map.data
    if args.mask_buildings:
        data = data.copy()
        data[grid.data != 0] = cfg.clamp_min_db
    r3dm.write_volume(args.out, grid.dims, data, r3dm.CH_LABEL)
    print(f"wrote {args.out}: range [{data.min():.2f}, {data.max():.2f}] dB")
    return EXIT_OK


def _cmd_sample(args) -> int:
    dims, label_data = r3dm.read_volume(args.label, expect_code=r3dm.CH_LABEL)
    grid = env_mod.load_occupancy(args.env, dims)
    label = RadioMap3D(dims, label_data.astype(np.float64), "normalized")
    cfg = SamplerConfig(args.xi, free_space_only=not args.all_voxels, seed=args.seed)
    sparse = sample_sparse(label, grid, cfg)
    r3dm.write_volume(args.out, dims, sparse.data, r3dm.CH_SPARSE)
    print(f"wrote {args.out}: {sparse.n_samples} samples")
    return EXIT_OK


def _cmd_encode(args) -> int:
    dims = _parse_dims(args.dims, args.res)
    txs = [_parse_tx(t) for t in args.tx]
    if args.sigma_xy is not None and args.sigma_z is not None:
        cfg = HeatmapConfig(args.sigma_xy, args.sigma_z)
    else:
        default = HeatmapConfig.from_dims(dims)
        cfg = HeatmapConfig(
            args.sigma_xy if args.sigma_xy is not None else default.sigma_xy_vox,
            args.sigma_z if args.sigma_z is not None else default.sigma_z_vox,
        )
    stack = encode_heatmap([(t.q, t.power_linear) for t in txs], dims, cfg)
    channels = [(r3dm.heatmap_code(i), stack[i]) for i in range(stack.shape[0])]
    r3dm.write_channels(args.out, dims, channels)
    print(f"wrote {args.out}: {stack.shape[0]} heatmap channels")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    dims_p, pred = r3dm.read_volume(args.pred)
    dims_t, truth = r3dm.read_volume(args.truth)
    domain = "db" if args.db else "normalized"
    pred_map = RadioMap3D(dims_p, pred.astype(np.float64), domain)
    truth_map = RadioMap3D(dims_t, truth.astype(np.float64), domain)
    cfg = metrics_mod.SsimConfig(window=args.ssim_window, data_range=args.data_range)
    psnr_db = metrics_mod.psnr(pred_map, truth_map, args.data_range)
    out = {
        "rmse": metrics_mod.rmse(pred_map, truth_map),
        "nmse": metrics_mod.nmse(pred_map, truth_map),
        "ssim": metrics_mod.ssim(pred_map, truth_map, cfg),
        "psnr_db": "inf" if psnr_db == float("inf") else psnr_db,
    }
    json.dump(out, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_build(args) -> int:
    cfg = dataset_io.BuildConfig.from_json(args.config)
    seed_override = os.environ.get("R3D_SEED")
    if seed_override is not None:
        try:
            seed = int(seed_override)
        except ValueError:
            raise InvalidParams(f"R3D_SEED must be an integer, got {seed_override!r}")
        cfg = dataset_io.BuildConfig.from_dict(
            {**json.load(open(args.config)), "seed": seed}
        )
    manifest = dataset_io.build_dataset(cfg, args.out, workers=args.workers)
    counts = {k: len(manifest.records_for_split(k)) for k in ("train", "val", "test")}
    print(f"wrote {manifest.sample_count} samples to {args.out} (splits: {counts})")
    return EXIT_OK


# ---- parser wiring ----

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="r3d", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-env", help="generate a procedural city occupancy grid")
    g.add_argument("--dims", required=True, help="WxDxH in voxels, e.g. 64x64x8")
    g.add_argument("--res", type=float, default=1.0, help="voxel edge, meters")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--pitch", type=int, default=16, help="block pitch, voxels")
    g.add_argument("--street", type=int, default=4, help="street width, voxels")
    g.add_argument("--height-range", default="4,8", help="building heights LO,HI voxels")
    g.add_argument("--fill", type=float, default=0.8, help="building fill probability")
    g.add_argument("--params", help="JSON file of city params (overrides the flags)")
    g.set_defaults(func=_cmd_gen_env)

    b = sub.add_parser("base", help="compute or import per-floor base predictions")
    b.add_argument("--env", required=True)
    b.add_argument("--tx", help="transmitter x,y,z,power_db (meters, dB)")
    b.add_argument("--from-slices", help="import an existing base-map file instead")
    b.add_argument("--a0", type=float, default=-40.0)
    b.add_argument("--b0", type=float, default=-20.0)
    b.add_argument("--wall-loss", type=float, default=6.0)
    b.add_argument("--floor", type=float, default=-150.0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_base)

    f = sub.add_parser("fit", help="fit target-model coefficients to measurements")
    f.add_argument("--measurements", required=True, help="CSV with header x,y,z,rss_db")
    f.add_argument("--base", required=True, help="base-map R3DM file")
    f.add_argument("--tx", required=True, help="transmitter x,y,z (meters)")
    f.add_argument("--out", required=True, help="output phi JSON")
    f.set_defaults(func=_cmd_fit)

    s = sub.add_parser("synth", help="synthesize a composed ground-truth map")
    s.add_argument("--env", required=True)
    s.add_argument("--phi", required=True, help="phi JSON (a, b, c, e)")
    s.add_argument("--tx", action="append", required=True, help="x,y,z,power_db; repeatable")
    s.add_argument("--base", action="append", required=True,
                   help="base-map file per tx (one shared file allowed)")
    s.add_argument("--noise-floor", type=float, default=None)
    s.add_argument("--clamp-min", type=float, default=-150.0)
    s.add_argument("--clamp-max", type=float, default=10.0)
    s.add_argument("--mask-buildings", action="store_true",
                   help="force building-interior voxels to the clamp minimum")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    m = sub.add_parser("sample", help="draw a sparse measurement map from a label")
    m.add_argument("--label", required=True, help="normalized label R3DM file")
    m.add_argument("--env", required=True)
    m.add_argument("--xi", type=float, required=True, help="sampled fraction (0, 1]")
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--all-voxels", action="store_true",
                   help="sample everywhere, not just free space")
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_sample)

    e = sub.add_parser("encode", help="encode transmitter heatmap channels")
    e.add_argument("--dims", required=True, help="WxDxH in voxels")
    e.add_argument("--res", type=float, default=1.0)
    e.add_argument("--tx", action="append", required=True, help="x,y,z,power_db; repeatable")
    e.add_argument("--sigma-xy", type=float, default=None, help="horizontal sigma, voxels")
    e.add_argument("--sigma-z", type=float, default=None, help="vertical sigma, voxels")
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_encode)

    t = sub.add_parser("metrics", help="compare two volumes (JSON to stdout)")
    t.add_argument("--pred", required=True)
    t.add_argument("--truth", required=True)
    t.add_argument("--ssim-window", type=int, default=7)
    t.add_argument("--data-range", type=float, default=1.0)
    t.add_argument("--db", action="store_true", help="volumes are in dB, not normalized")
    t.set_defaults(func=_cmd_metrics)

    d = sub.add_parser("build", help="build a full dataset from a config")
    d.add_argument("--config", required=True, help="build config JSON")
    d.add_argument("--out", required=True, help="output dataset directory")
    d.add_argument("--workers", type=int, default=1)
    d.set_defaults(func=_cmd_build)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParams, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (R3DError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
