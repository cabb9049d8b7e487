"""Binary parameter checkpoints.

Layout (little-endian):

    magic  b"BGCKPT1"
    u32 kind length, kind bytes (one of "MLP", "GCN", "GAT", "SAGE")
    u32 config length, config JSON bytes (keys sorted, so files are
        byte-reproducible)
    u32 parameter count
    per parameter: u32 name length, name bytes, u32 rows, u32 cols,
        rows*cols f64
    u32 CRC32 over everything between the magic and this field
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ChecksumFailure, UserDataError

CHECKPOINT_MAGIC = b"BGCKPT1"


class CheckpointFormatError(UserDataError):
    pass


def save_checkpoint(path: str | Path, kind: str, config: dict, params: dict) -> None:
    payload = bytearray()
    kind_b = kind.encode("utf-8")
    payload += struct.pack("<I", len(kind_b)) + kind_b
    config_b = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload += struct.pack("<I", len(config_b)) + config_b
    payload += struct.pack("<I", len(params))
    for name, value in params.items():
        data = np.asarray(getattr(value, "data", value), dtype=np.float64)
        name_b = name.encode("utf-8")
        payload += struct.pack("<I", len(name_b)) + name_b
        payload += struct.pack("<II", data.shape[0], data.shape[1])
        payload += data.astype("<f8").tobytes()
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    Path(path).write_bytes(CHECKPOINT_MAGIC + bytes(payload) + struct.pack("<I", crc))


def load_checkpoint(path: str | Path) -> tuple[str, dict, dict]:
    """Returns (model kind, config dict, name -> f64 array)."""
    blob = Path(path).read_bytes()
    if not blob.startswith(CHECKPOINT_MAGIC) or len(blob) < len(CHECKPOINT_MAGIC) + 4:
        raise CheckpointFormatError(f"{path}: not a checkpoint file")
    payload, crc_bytes = blob[len(CHECKPOINT_MAGIC):-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumFailure(f"{path}: CRC32 mismatch")
    offset = 0

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(payload):
            raise CheckpointFormatError(f"{path}: truncated payload")
        out = payload[offset:offset + n]
        offset += n
        return out

    (kind_len,) = struct.unpack("<I", take(4))
    kind = take(kind_len).decode("utf-8")
    (config_len,) = struct.unpack("<I", take(4))
    config = json.loads(take(config_len).decode("utf-8"))
    (n_params,) = struct.unpack("<I", take(4))
    params: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        rows, cols = struct.unpack("<II", take(8))
        data = np.frombuffer(take(8 * rows * cols), dtype="<f8").reshape(rows, cols)
        params[name] = data.copy()
    if offset != len(payload):
        raise CheckpointFormatError(f"{path}: {len(payload) - offset} trailing bytes")
    return kind, config, params
