"""Stand-alone reader for R3DM volume containers.

This package never imports the dataset generator; the byte layout below is
the whole contract between the two sides.

Layout, little-endian: magic b"R3DM", u16 version (1), u8 channel count,
u32 width/depth/height, f32 resolution in meters, then per channel a u8
type code followed by width*depth*height f32 values in x-major order
(flat index of (x, y, z) is (x*depth + y)*height + z), and finally a u32
CRC32C (Castagnoli) over every preceding byte.

Type codes: 0 label, 1 environment, 2 sparse measurements, 16+i transmitter
heatmap i (i < 16), 32 base-map stack. Codes are unique within a file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DataFormatError

MAGIC = b"R3DM"
VERSION = 1

CH_LABEL = 0
CH_ENV = 1
CH_SPARSE = 2
CH_HEATMAP_BASE = 16
CH_BASE2D = 32
_MAX_HEATMAPS = 16

_HEADER = struct.Struct("<4sHBIIIf")


@dataclass(frozen=True)
class VolumeInfo:
    width: int
    depth: int
    height: int
    resolution_m: float

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.width, self.depth, self.height)

    @property
    def n_voxels(self) -> int:
        return self.width * self.depth * self.height


def is_heatmap_code(code: int) -> bool:
    return CH_HEATMAP_BASE <= code < CH_HEATMAP_BASE + _MAX_HEATMAPS


def _known_code(code: int) -> bool:
    return code in (CH_LABEL, CH_ENV, CH_SPARSE, CH_BASE2D) or is_heatmap_code(code)


def _crc_table() -> np.ndarray:
    table = np.arange(256, dtype=np.uint32)
    for _ in range(8):
        table = np.where(table & 1, (table >> 1) ^ np.uint32(0x82F63B78), table >> 1)
    return table


_TABLE = _crc_table()


@njit(cache=True)
def _crc_loop(buf, table, crc):  # pragma: no cover - jitted
    for i in range(buf.size):
        crc = table[(crc ^ buf[i]) & np.uint32(0xFF)] ^ (crc >> np.uint32(8))
    return crc


def crc32c(data) -> int:
    buf = np.frombuffer(data, dtype=np.uint8)
    crc = _crc_loop(buf, _TABLE, np.uint32(0xFFFFFFFF))
    return int(crc ^ np.uint32(0xFFFFFFFF))


def decode(blob: bytes) -> tuple[VolumeInfo, list[tuple[int, np.ndarray]]]:
    """Parse one container; checksum-verified. Arrays come back (W, D, H) f32."""
    if len(blob) < _HEADER.size + 4:
        raise DataFormatError("file shorter than a valid header")
    magic, version, n_ch, w, d, h, res = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"unsupported version {version}")
    if n_ch < 1:
        raise DataFormatError("channel count must be >= 1")
    if min(w, d, h) < 1 or not (res > 0.0) or not np.isfinite(res):
        raise DataFormatError(f"bad dims ({w}, {d}, {h}) @ {res}")
    info = VolumeInfo(w, d, h, float(res))
    expected = _HEADER.size + n_ch * (1 + 4 * info.n_voxels) + 4
    if len(blob) != expected:
        raise DataFormatError(f"file is {len(blob)} bytes, layout implies {expected}")
    stored = struct.unpack_from("<I", blob, len(blob) - 4)[0]
    actual = crc32c(memoryview(blob)[:-4])
    if stored != actual:
        raise DataFormatError(
            f"checksum {stored:#010x} != computed {actual:#010x}"
        )

    channels: list[tuple[int, np.ndarray]] = []
    seen: set[int] = set()
    off = _HEADER.size
    for _ in range(n_ch):
        code = blob[off]
        off += 1
        if not _known_code(code):
            raise DataFormatError(f"unknown channel type code {code}")
        if code in seen:
            raise DataFormatError(f"duplicate channel type code {code}")
        seen.add(code)
        payload = np.frombuffer(blob, dtype="<f4", count=info.n_voxels, offset=off)
        channels.append((code, payload.reshape(info.shape).copy()))
        off += 4 * info.n_voxels
    return info, channels


def read_file(path) -> tuple[VolumeInfo, list[tuple[int, np.ndarray]]]:
    with open(path, "rb") as f:
        return decode(f.read())


def trailer_checksum(path) -> int:
    """The stored CRC32C, for cross-checking against manifest records."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 4:
        raise DataFormatError("file shorter than its checksum trailer")
    return struct.unpack_from("<I", blob, len(blob) - 4)[0]
