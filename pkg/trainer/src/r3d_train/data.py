"""Dataset access: manifest-driven loading of R3DM samples into tensors.

A sample file carries the channel superset [heatmap_0..k-1, sparse, env,
label]; a config tag picks the model-input view:

    sparse_and_tx   heatmaps + sparse + env
    sparse_only     sparse + env
    tx_only         heatmaps + env

Channel order inside the stack is heatmaps (ascending), then sparse, then
env; the label is returned separately. Splits come from the manifest and are
environment-level, so desk datasets fit in memory and are loaded eagerly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import r3dm_reader as rd
from .errors import DataFormatError

CONFIG_TAGS = ("sparse_and_tx", "sparse_only", "tx_only")
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SplitTensors:
    """One split's inputs and labels, fully materialized."""

    x: torch.Tensor  # (N, C, W, D, H) float32
    y: torch.Tensor  # (N, 1, W, D, H) float32
    info: rd.VolumeInfo
    tag: str
    files: tuple[str, ...]

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def in_channels(self) -> int:
        return self.x.shape[1]


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise DataFormatError(f"no manifest.json in {dataset_dir}")
    with open(path) as f:
        doc = json.load(f)
    for key in ("dims", "sample_count", "split", "records"):
        if key not in doc:
            raise DataFormatError(f"manifest is missing {key!r}")
    return doc


def view_channels(
    channels: list[tuple[int, np.ndarray]], tag: str
) -> tuple[np.ndarray, np.ndarray]:
    """Stack the tag's input channels; returns (x_stack, label)."""
    if tag not in CONFIG_TAGS:
        raise DataFormatError(f"unknown config tag {tag!r}")
    by_code = dict(channels)
    if len(by_code) != len(channels):
        raise DataFormatError("sample has duplicate channel codes")
    for code in (rd.CH_LABEL, rd.CH_ENV):
        if code not in by_code:
            raise DataFormatError(f"sample is missing channel code {code}")
    stack: list[np.ndarray] = []
    if tag in ("sparse_and_tx", "tx_only"):
        heat_codes = sorted(c for c in by_code if rd.is_heatmap_code(c))
        if not heat_codes:
            raise DataFormatError(f"config {tag!r} needs heatmap channels")
        stack.extend(by_code[c] for c in heat_codes)
    if tag in ("sparse_and_tx", "sparse_only"):
        if rd.CH_SPARSE not in by_code:
            raise DataFormatError(f"config {tag!r} needs a sparse channel")
        stack.append(by_code[rd.CH_SPARSE])
    stack.append(by_code[rd.CH_ENV])
    return np.stack(stack), by_code[rd.CH_LABEL]


def load_split(dataset_dir, tag: str, split: str) -> SplitTensors:
    """Read every sample of one split, checksum-verified, into RAM."""
    if split not in SPLITS:
        raise DataFormatError(f"unknown split {split!r}")
    doc = load_manifest(dataset_dir)
    root = Path(dataset_dir)
    env_ids = set(doc["split"].get(split, []))
    records = [r for r in doc["records"] if r["env_id"] in env_ids]
    xs, ys, files = [], [], []
    info: rd.VolumeInfo | None = None
    for rec in records:
        path = root / rec["file"]
        sample_info, channels = rd.read_file(path)
        if info is None:
            info = sample_info
        elif sample_info != info:
            raise DataFormatError(f"{path} grid {sample_info} != dataset grid {info}")
        if "checksum" in rec:
            stored = int(rec["checksum"], 16)
            actual = rd.trailer_checksum(path)
            if stored != actual:
                raise DataFormatError(
                    f"{path}: manifest checksum {stored:#010x} != file {actual:#010x}"
                )
        x, y = view_channels(channels, tag)
        xs.append(torch.from_numpy(x))
        ys.append(torch.from_numpy(y[None]))
        files.append(rec["file"])
    if info is None:
        dd = doc["dims"]
        info = rd.VolumeInfo(
            int(dd["width"]), int(dd["depth"]), int(dd["height"]),
            float(dd.get("resolution_m", 1.0)),
        )
        empty_c = {"sparse_and_tx": 3, "sparse_only": 2, "tx_only": 2}[tag]
        return SplitTensors(
            torch.zeros(0, empty_c, *info.shape),
            torch.zeros(0, 1, *info.shape),
            info, tag, (),
        )
    return SplitTensors(torch.stack(xs), torch.stack(ys), info, tag, tuple(files))
