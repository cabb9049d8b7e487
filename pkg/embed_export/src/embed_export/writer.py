"""BGEMB1 embedding file writer (little-endian).

Layout: magic b"BGEMB1", u32 record count, u32 dimension, then per
record a u64 bug id followed by dim float32 values, and a trailing u32
CRC32 over every byte between the magic and the checksum. Files are
written atomically via a temp file in the target directory."""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

EMBED_MAGIC = b"BGEMB1"


class WriteFailure(Exception):
    pass


def write_embeddings(path: str | Path, ids, rows: np.ndarray) -> None:
    ids = [int(i) for i in ids]
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2 or rows.shape[0] != len(ids):
        raise WriteFailure(f"rows shape {rows.shape} does not match {len(ids)} ids")
    payload = bytearray()
    payload += struct.pack("<II", len(ids), rows.shape[1])
    for bug_id, row in zip(ids, rows):
        payload += struct.pack("<Q", bug_id)
        payload += row.astype("<f4").tobytes()
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    blob = EMBED_MAGIC + bytes(payload) + struct.pack("<I", crc)
    path = Path(path)
    try:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp_name, path)
        except BaseException:
            os.unlink(tmp_name)
            raise
    except OSError as err:
        raise WriteFailure(f"cannot write {path}: {err}") from err
