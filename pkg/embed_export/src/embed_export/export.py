"""Export job: clean, encode, write."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cleaning import clean_text
from .corpus import read_corpus
from .encoders import DEFAULT_ENCODER, resolve_encoder
from .writer import write_embeddings

FIELDS = ("description", "comments")


@dataclass(frozen=True)
class ExportJob:
    corpus: str
    field: str
    out: str
    encoder: str = DEFAULT_ENCODER
    batch_size: int = 32

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}, got {self.field!r}")
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")


def export(job: ExportJob) -> Path:
    """Encode one text field for every bug (rows ascending by bug id) and
    write the embedding file; returns the output path.

    Empty texts are encoded as the encoder's embedding of the empty
    string, never silently zeroed."""
    records = read_corpus(job.corpus)
    encoder = resolve_encoder(job.encoder)
    texts = []
    for rec in records:
        if job.field == "description":
            texts.append(clean_text(rec.description))
        else:
            parts = (clean_text(c) for c in rec.comments)
            texts.append(" ".join(p for p in parts if p))
    rows = np.empty((len(records), encoder.dim), dtype=np.float32)
    for lo in range(0, len(texts), job.batch_size):
        batch = texts[lo:lo + job.batch_size]
        rows[lo:lo + len(batch)] = encoder.encode(batch)
    write_embeddings(job.out, [rec.id for rec in records], rows)
    return Path(job.out)
