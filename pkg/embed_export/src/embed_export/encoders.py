"""Sentence-encoder resolution.

Encoders expose ``dim`` and ``encode(texts) -> (n, dim) float32``. Names
resolve through a registry first (tests inject deterministic doubles
there), then fall back to loading a sentence-transformers model of that
name; failures surface as ``EncoderUnavailable``."""

from __future__ import annotations

from typing import Callable, Protocol

import numpy as np

DEFAULT_ENCODER = "paraphrase-mpnet-base-v2"


class EncoderUnavailable(Exception):
    pass


class TextEncoder(Protocol):
    dim: int

    def encode(self, texts: list[str]) -> np.ndarray: ...


_REGISTRY: dict[str, Callable[[], "TextEncoder"]] = {}


def register_encoder(name: str, factory: Callable[[], "TextEncoder"]) -> None:
    _REGISTRY[name] = factory


class SentenceTransformerEncoder:
    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as err:
            raise EncoderUnavailable(f"sentence-transformers not installed: {err}") from err
        try:
            self._model = SentenceTransformer(name)
        except Exception as err:
            raise EncoderUnavailable(f"cannot load encoder {name!r}: {err}") from err
        self.name = name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        out = self._model.encode(
            list(texts), convert_to_numpy=True, show_progress_bar=False
        )
        return np.asarray(out, dtype=np.float32).reshape(len(texts), self.dim)


def resolve_encoder(name: str) -> "TextEncoder":
    if name in _REGISTRY:
        return _REGISTRY[name]()
    return SentenceTransformerEncoder(name)
