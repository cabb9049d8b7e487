"""Node-aligned feature matrices from bug texts.

Embedding providers are pluggable and must be deterministic per call.
The in-repo provider is a hashed TF-IDF (signed feature hashing); real
sentence-encoder vectors arrive precomputed through the binary embedding
file format below.

Embedding file (little-endian):

    magic  b"BGEMB1"
    u32    record count
    u32    dimension
    per record: u64 bug id, dim x f32
    u32    CRC32 over everything between the magic and this field
"""

from __future__ import annotations

import hashlib
import re
import struct
import zlib
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .corpus import Corpus, clean_text, comment_window
from .errors import BugrankError, ChecksumFailure, UserDataError

EMBED_MAGIC = b"BGEMB1"

FIELD_SPECS = ("description", "comments", "both")


class MissingId(UserDataError):
    def __init__(self, bug_id: int):
        super().__init__(f"embedding file has no row for bug {bug_id}")
        self.bug_id = bug_id


class DimMismatch(UserDataError):
    pass


class EmbeddingFormatError(UserDataError):
    pass


class UnknownNode(BugrankError):
    def __init__(self, bug_id: int):
        super().__init__(f"node {bug_id} has no corpus record")
        self.bug_id = bug_id


_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _token_hash(token: str, seed: int) -> int:
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


class HashedTfidfProvider:
    """Signed feature hashing of TF-IDF weights, fit on a cleaned corpus.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1; rows are L2-normalized unless
    all-zero. Deterministic given (corpus, dim, seed).
    """

    deterministic = True

    def __init__(self, corpus_texts: list[str], dim: int, seed: int = 0):
        if not corpus_texts:
            raise ValueError("tf-idf corpus must be non-empty")
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.dim = dim
        self.seed = seed
        self.name = f"hashed-tfidf-{dim}"
        self._n_docs = len(corpus_texts)
        df: dict[str, int] = {}
        for text in corpus_texts:
            for token in set(tokenize(text)):
                df[token] = df.get(token, 0) + 1
        self._df = df

    def _idf(self, token: str) -> float:
        return np.log((1 + self._n_docs) / (1 + self._df.get(token, 0))) + 1.0

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        tokens = tokenize(text)
        if not tokens:
            return vec
        tf: dict[str, int] = {}
        for token in tokens:
            tf[token] = tf.get(token, 0) + 1
        for token, count in tf.items():
            h = _token_hash(token, self.seed)
            bucket = h % self.dim
            sign = 1.0 if (h >> 32) & 1 else -1.0
            vec[bucket] += sign * count * self._idf(token)
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def hashed_tfidf_embed(texts: list[str], dim: int, target: str,
                       seed: int = 0) -> np.ndarray:
    """One-shot hashed TF-IDF of ``target`` against a fitted corpus.

    Convenience over ``HashedTfidfProvider``; prefer the provider when
    embedding many texts against the same corpus."""
    return HashedTfidfProvider(texts, dim, seed).embed(target)


class PrecomputedProvider:
    """Provider view over rows loaded from an embedding file, keyed by bug id."""

    deterministic = True

    def __init__(self, ids: list[int], rows: np.ndarray, name: str = "precomputed"):
        self.dim = rows.shape[1]
        self.name = name
        self._rows = {bug_id: rows[i] for i, bug_id in enumerate(ids)}

    def row_for(self, bug_id: int) -> np.ndarray:
        if bug_id not in self._rows:
            raise MissingId(bug_id)
        return np.asarray(self._rows[bug_id], dtype=np.float64)


@dataclass(frozen=True)
class FeatureMatrix:
    node_ids: tuple[int, ...]
    rows: np.ndarray  # n x d, float64
    field_spec: str

    def __post_init__(self):
        if self.field_spec not in FIELD_SPECS:
            raise ValueError(f"bad field_spec {self.field_spec!r}")
        if self.rows.shape[0] != len(self.node_ids):
            raise ValueError(
                f"row count {self.rows.shape[0]} != node count {len(self.node_ids)}"
            )
        if not np.isfinite(self.rows).all():
            raise ValueError("feature matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def comment_document(rec, window_end: datetime) -> str:
    """Windowed comments, cleaned one by one, joined with single spaces."""
    parts = (clean_text(text) for text in comment_window(rec, window_end))
    return " ".join(p for p in parts if p)


def _embed_record(provider, corpus: Corpus, bug_id: int, which: str,
                  window_end: datetime) -> np.ndarray:
    rec = corpus.get(bug_id)
    if rec is None:
        raise UnknownNode(bug_id)
    if isinstance(provider, PrecomputedProvider):
        return provider.row_for(bug_id)
    if which == "description":
        text = clean_text(rec.description)
    else:
        text = comment_document(rec, window_end)
    return np.asarray(provider.embed(text), dtype=np.float64)


def build_features(corpus: Corpus, node_order, provider_desc, provider_comm,
                   fields: str, comment_window_end: datetime) -> FeatureMatrix:
    """Per-node rows: description embedding, comments embedding, or their
    concatenation. Comments are windowed, cleaned, and joined with spaces."""
    if fields not in FIELD_SPECS:
        raise ValueError(f"bad fields {fields!r}")
    node_order = tuple(node_order)
    blocks = []
    for bug_id in node_order:
        parts = []
        if fields in ("description", "both"):
            parts.append(_embed_record(provider_desc, corpus, bug_id, "description",
                                       comment_window_end))
        if fields in ("comments", "both"):
            parts.append(_embed_record(provider_comm, corpus, bug_id, "comments",
                                       comment_window_end))
        blocks.append(np.concatenate(parts))
    rows = np.vstack(blocks) if blocks else np.zeros((0, 0))
    return FeatureMatrix(node_order, rows, fields)


def save_embeddings(path: str | Path, ids, rows: np.ndarray) -> None:
    """Write the binary embedding format; rows are stored as f32."""
    ids = list(ids)
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2 or rows.shape[0] != len(ids):
        raise ValueError(f"rows shape {rows.shape} does not match {len(ids)} ids")
    payload = bytearray()
    payload += struct.pack("<II", len(ids), rows.shape[1])
    for bug_id, row in zip(ids, rows):
        payload += struct.pack("<Q", bug_id)
        payload += row.astype("<f4").tobytes()
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    Path(path).write_bytes(EMBED_MAGIC + bytes(payload) + struct.pack("<I", crc))


def read_embedding_file(path: str | Path) -> tuple[list[int], np.ndarray]:
    """Read an embedding file; returns (ids in file order, f32 rows)."""
    blob = Path(path).read_bytes()
    if len(blob) < len(EMBED_MAGIC) + 12 or not blob.startswith(EMBED_MAGIC):
        raise EmbeddingFormatError(f"{path}: not an embedding file")
    payload, crc_bytes = blob[len(EMBED_MAGIC):-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumFailure(f"{path}: CRC32 mismatch")
    count, dim = struct.unpack_from("<II", payload, 0)
    record_size = 8 + 4 * dim
    if len(payload) != 8 + count * record_size:
        raise DimMismatch(
            f"{path}: payload holds {len(payload) - 8} record bytes, "
            f"expected {count} records of {record_size} bytes ({dim} floats each)"
        )
    ids: list[int] = []
    rows = np.empty((count, dim), dtype=np.float32)
    offset = 8
    for i in range(count):
        (bug_id,) = struct.unpack_from("<Q", payload, offset)
        offset += 8
        rows[i] = np.frombuffer(payload, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        ids.append(bug_id)
    if len(set(ids)) != len(ids):
        raise EmbeddingFormatError(f"{path}: duplicate bug ids")
    return ids, rows


def load_embeddings(path: str | Path, expected_ids) -> np.ndarray:
    """Rows from an embedding file reordered to ``expected_ids`` (f64)."""
    ids, rows = read_embedding_file(path)
    expected_ids = list(expected_ids)
    index = {bug_id: i for i, bug_id in enumerate(ids)}
    out = np.empty((len(expected_ids), rows.shape[1]), dtype=np.float64)
    for pos, bug_id in enumerate(expected_ids):
        if bug_id not in index:
            raise MissingId(bug_id)
        out[pos] = rows[index[bug_id]].astype(np.float64)
    return out
