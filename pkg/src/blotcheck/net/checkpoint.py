"""Model checkpoint file format.

Layout: magic ``BLCK`` | format version u16 LE | header length u32 LE |
JSON header (architecture & training seed) | raw little-endian float32
parameter blocks in declaration order | CRC32 (u32 LE) of everything
preceding. The CRC is checked before anything else is interpreted, so a
truncated or corrupted file is rejected up front.
"""

from __future__ import annotations

import json
import os
import struct
import zlib

import numpy as np

from ..errors import ChecksumMismatch, VersionMismatch
from .model import ConvLayer, LinearLayer, SiameseModel, feature_dim_for

__all__ = ["save_model", "load_model", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"BLCK"
FORMAT_VERSION = 1


def save_model(model: SiameseModel, path: str | os.PathLike, seed: int | None = None) -> None:
    """Write the model; parameters are stored as float32."""
    header = {
        "channels": list(model.channel_plan),
        "input_size": model.input_size,
        "kernel": model.kernel_size,
        "merge_mode": model.merge_mode,
        "seed": seed,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", FORMAT_VERSION)
    blob += struct.pack("<I", len(header_bytes))
    blob += header_bytes
    for param in model.parameters():
        blob += np.ascontiguousarray(param, dtype="<f4").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(bytes(blob))
    os.replace(tmp, path)


def load_model(path: str | os.PathLike) -> SiameseModel:
    """Read a checkpoint back; every parameter is restored bit-exactly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 14:
        raise ChecksumMismatch("file too short to be a checkpoint")
    body, tail = data[:-4], data[-4:]
    if struct.unpack("<I", tail)[0] != (zlib.crc32(body) & 0xFFFFFFFF):
        raise ChecksumMismatch("checkpoint CRC mismatch (corrupt or truncated)")
    if body[:4] != MAGIC:
        raise ChecksumMismatch(f"bad magic {body[:4]!r}")
    (version,) = struct.unpack("<H", body[4:6])
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported checkpoint version {version}")
    (header_len,) = struct.unpack("<I", body[6:10])
    header = json.loads(body[10 : 10 + header_len].decode("utf-8"))
    channels = tuple(int(c) for c in header["channels"])
    input_size = int(header["input_size"])
    kernel = int(header["kernel"])

    offset = 10 + header_len
    in_ch = 1
    branch: list[ConvLayer] = []

    def take(shape: tuple[int, ...]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(body):
            raise ChecksumMismatch("parameter blocks truncated")
        arr = np.frombuffer(body[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
        return arr

    for out_ch in channels:
        w = take((out_ch, in_ch, kernel, kernel))
        b = take((out_ch,))
        branch.append(ConvLayer(w, b))
        in_ch = out_ch
    feat = feature_dim_for(input_size, channels, kernel)
    head = LinearLayer(take((1, feat)), take((1,)))
    if offset != len(body):
        raise ChecksumMismatch("trailing bytes after parameter blocks")
    return SiameseModel(branch, head, input_size, header["merge_mode"])
