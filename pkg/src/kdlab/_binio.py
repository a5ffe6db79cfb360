"""Framing shared by the checkpoint and dataset file formats.

Layout: magic bytes, little-endian uint32 format version, payload,
trailing crc32 (little-endian uint32) over everything before it.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path


class FileFormatError(ValueError):
    """Bad magic, version, truncation, or checksum mismatch."""


def write_framed(path, magic: bytes, version: int, payload: bytes):
    blob = magic + struct.pack("<I", version) + payload
    blob += struct.pack("<I", zlib.crc32(blob))
    Path(path).write_bytes(blob)


def read_framed(path, magic: bytes, version: int) -> bytes:
    blob = Path(path).read_bytes()
    head = len(magic) + 4
    if len(blob) < head + 4:
        raise FileFormatError(f"{path}: truncated file ({len(blob)} bytes)")
    if blob[: len(magic)] != magic:
        raise FileFormatError(f"{path}: bad magic header {blob[:len(magic)]!r}, expected {magic!r}")
    (got_version,) = struct.unpack_from("<I", blob, len(magic))
    if got_version != version:
        raise FileFormatError(f"{path}: format version {got_version}, expected {version}")
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise FileFormatError(f"{path}: checksum mismatch")
    return blob[head:-4]
