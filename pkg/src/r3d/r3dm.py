"""R3DM: the self-describing binary container for voxel volumes.

Every volume the pipeline persists (occupancy, base maps, labels, sparse
samples, heatmaps, assembled feature stacks) travels in this one format, so
that downstream consumers in any language can parse it from the byte layout
alone.

Layout, all little-endian::

    magic            4 bytes   b"R3DM"
    version          u16       currently 1
    channel_count    u8        >= 1
    width            u32       voxels along x
    depth            u32       voxels along y
    height           u32       voxels along z
    resolution_m     f32       voxel edge length, meters
    channels         channel_count times:
        channel_type u8        see type codes below
        payload      width*depth*height f32, x-major:
                               flat index of (x, y, z) = (x*depth + y)*height + z
    checksum         u32       CRC32C (Castagnoli) over every preceding byte

Channel type codes::

    0   label (ground-truth map)
    1   environment occupancy
    2   sparse measurement map
    16+i  transmitter heatmap i (i in [0, 16))
    32  2-D base prediction stack

Type codes must be unique within a file. The checksum covers the header and
all channel bytes; a single flipped payload bit fails verification.
"""

from __future__ import annotations

import struct

import numpy as np
from numba import njit

from .errors import ChecksumMismatch, FormatError, InvalidParams, ShapeMismatch
from .grid import GridDims

MAGIC = b"R3DM"
VERSION = 1

CH_LABEL = 0
CH_ENV = 1
CH_SPARSE = 2
CH_HEATMAP_BASE = 16
CH_BASE2D = 32

_MAX_HEATMAPS = 16

_HEADER = struct.Struct("<4sHBIIIf")


def heatmap_code(i: int) -> int:
    """Type code of the i-th transmitter heatmap channel."""
    if not (0 <= i < _MAX_HEATMAPS):
        raise InvalidParams(f"heatmap index {i} outside [0, {_MAX_HEATMAPS})")
    return CH_HEATMAP_BASE + i


def is_heatmap_code(code: int) -> bool:
    return CH_HEATMAP_BASE <= code < CH_HEATMAP_BASE + _MAX_HEATMAPS


def _known_code(code: int) -> bool:
    return code in (CH_LABEL, CH_ENV, CH_SPARSE, CH_BASE2D) or is_heatmap_code(code)


# ---- CRC32C (Castagnoli), reflected polynomial 0x82F63B78 ----

def _make_table() -> np.ndarray:
    table = np.arange(256, dtype=np.uint32)
    for _ in range(8):
        table = np.where(table & 1, (table >> 1) ^ np.uint32(0x82F63B78), table >> 1)
    return table


_CRC_TABLE = _make_table()


@njit(cache=True)
def _crc_update(buf, table, crc):  # pragma: no cover - jitted
    for i in range(buf.size):
        crc = table[(crc ^ buf[i]) & np.uint32(0xFF)] ^ (crc >> np.uint32(8))
    return crc


def crc32c(data, value: int = 0) -> int:
    """CRC32C of a bytes-like object; `value` chains partial checksums."""
    buf = np.frombuffer(data, dtype=np.uint8)
    crc = np.uint32(value) ^ np.uint32(0xFFFFFFFF)
    crc = _crc_update(buf, _CRC_TABLE, crc)
    return int(crc ^ np.uint32(0xFFFFFFFF))


# ---- encode / decode ----

def encode(dims: GridDims, channels: list[tuple[int, np.ndarray]]) -> bytes:
    """Serialize channels into one R3DM byte string (checksum included)."""
    if not channels:
        raise InvalidParams("R3DM file needs at least one channel")
    if len(channels) > 255:
        raise InvalidParams("channel_count exceeds u8")
    codes = [c for c, _ in channels]
    if len(set(codes)) != len(codes):
        raise InvalidParams(f"duplicate channel type codes: {codes}")
    parts = [
        _HEADER.pack(
            MAGIC, VERSION, len(channels),
            dims.width, dims.depth, dims.height, dims.resolution_m,
        )
    ]
    for code, data in channels:
        if not _known_code(code):
            raise InvalidParams(f"unknown channel type code {code}")
        if data.shape != dims.shape:
            raise ShapeMismatch(f"channel {code} shape {data.shape} != {dims.shape}")
        parts.append(struct.pack("<B", code))
        parts.append(np.ascontiguousarray(data, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", crc32c(body))


def decode(blob: bytes) -> tuple[GridDims, list[tuple[int, np.ndarray]]]:
    """Parse an R3DM byte string; verifies layout, then checksum."""
    if len(blob) < _HEADER.size + 4:
        raise FormatError("file shorter than a valid header")
    magic, version, n_ch, w, d, h, res = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if n_ch < 1:
        raise FormatError("channel_count must be >= 1")
    if min(w, d, h) < 1 or not (res > 0.0) or not np.isfinite(res):
        raise FormatError(f"bad dims ({w}, {d}, {h}) @ {res}")
    n_vox = w * d * h
    expected = _HEADER.size + n_ch * (1 + 4 * n_vox) + 4
    if len(blob) != expected:
        raise FormatError(f"file is {len(blob)} bytes, layout implies {expected}")
    stored = struct.unpack_from("<I", blob, len(blob) - 4)[0]
    actual = crc32c(memoryview(blob)[:-4])
    if stored != actual:
        raise ChecksumMismatch(f"checksum {stored:#010x} != computed {actual:#010x}")

    dims = GridDims(w, d, h, res)
    channels = []
    seen = set()
    off = _HEADER.size
    for _ in range(n_ch):
        code = blob[off]
        off += 1
        if not _known_code(code):
            raise FormatError(f"unknown channel type code {code}")
        if code in seen:
            raise FormatError(f"duplicate channel type code {code}")
        seen.add(code)
        payload = np.frombuffer(blob, dtype="<f4", count=n_vox, offset=off)
        channels.append((code, payload.reshape(dims.shape).copy()))
        off += 4 * n_vox
    return dims, channels


# ---- file helpers ----

def write_channels(path, dims: GridDims, channels: list[tuple[int, np.ndarray]]) -> int:
    """Write an R3DM file; returns the trailer checksum."""
    blob = encode(dims, channels)
    with open(path, "wb") as f:
        f.write(blob)
    return struct.unpack("<I", blob[-4:])[0]


def read_channels(path) -> tuple[GridDims, list[tuple[int, np.ndarray]]]:
    with open(path, "rb") as f:
        blob = f.read()
    return decode(blob)


def write_volume(path, dims: GridDims, data: np.ndarray, code: int) -> int:
    """Write a single-channel R3DM file; returns the trailer checksum."""
    return write_channels(path, dims, [(code, data)])


def read_volume(path, expect_code: int | None = None) -> tuple[GridDims, np.ndarray]:
    """Read a single-channel R3DM file, optionally requiring a type code."""
    dims, channels = read_channels(path)
    if len(channels) != 1:
        raise FormatError(f"expected a single channel, file has {len(channels)}")
    code, data = channels[0]
    if expect_code is not None and code != expect_code:
        raise FormatError(f"expected channel type {expect_code}, file has {code}")
    return dims, data
