from __future__ import annotations

import json

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")

from tests import synth


@pytest.fixture(scope="session")
def five_bug_corpus():
    return synth.five_bug_corpus()


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "tiny.jsonl"
    return synth.synth_corpus(path, n_train=60, n_test=40, seed=7)


@pytest.fixture()
def tiny_corpus_path(tmp_path):
    path = tmp_path / "tiny.jsonl"
    synth.write_jsonl(synth.synth_corpus_objects(n_train=60, n_test=40, seed=7), path)
    return path
