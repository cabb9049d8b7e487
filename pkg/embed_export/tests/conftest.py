from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest

from embed_export.encoders import register_encoder

STUB_NAME = "stub-768"


class StubEncoder:
    """Deterministic stand-in with the default encoder's width."""

    def __init__(self, dim=768):
        self.dim = dim
        self.seen: list[str] = []

    def encode(self, texts):
        self.seen.extend(texts)
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            rows[i] = rng.normal(size=self.dim).astype(np.float32)
        return rows


@pytest.fixture()
def stub_encoder():
    encoder = StubEncoder()
    register_encoder(STUB_NAME, lambda: encoder)
    return encoder


@pytest.fixture()
def three_bug_corpus(tmp_path):
    objs = [
        {
            "id": 45702,
            "reported_on": "mono",
            "created_at": "2017-01-02T00:00:00Z",
            "description": "player crashes on startup, see https://bugs.example/1",
            "comments": [
                {"ts": "2017-02-01T00:00:00Z", "text": "confirmed on 16.04"},
                {"ts": "2017-03-01T00:00:00Z", "text": "patch attached"},
            ],
            "affected": [{"ts": None, "package": "mono"}],
            "heat_snapshots": [{"crawl_date": "2019-11-01", "heat": 12}],
        },
        {
            "id": 64371,
            "reported_on": "banshee",
            "created_at": "2017-01-03T00:00:00Z",
            "description": "",
            "comments": [{"ts": "2017-02-02T00:00:00Z", "text": "me too"}],
            "affected": [{"ts": None, "package": "banshee"}],
            "heat_snapshots": [{"crawl_date": "2019-11-01", "heat": 4}],
        },
        {
            "id": 1022921,
            "reported_on": "rhythmbox",
            "created_at": "2017-01-04T00:00:00Z",
            "description": "library scan hangs forever",
            "comments": [{"ts": "2017-02-03T00:00:00Z", "text": "same after upgrade"}],
            "affected": [{"ts": None, "package": "rhythmbox"}],
            "heat_snapshots": [{"crawl_date": "2019-11-01", "heat": 7}],
        },
    ]
    path = tmp_path / "bugs.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj) + "\n")
    return path
