"""Minimal reader for the bug-corpus JSON Lines interchange format.

Only the fields this tool encodes are materialized: bug id, description
and the comment texts (in file order). Records that lack them are
rejected with their line number."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CorpusError(Exception):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass(frozen=True)
class BugTexts:
    id: int
    description: str
    comments: tuple[str, ...]


def read_corpus(path: str | Path) -> list[BugTexts]:
    """Bug texts sorted ascending by bug id."""
    out: dict[int, BugTexts] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(line_no, f"invalid JSON: {err.msg}") from err
            try:
                bug_id = int(obj["id"])
                description = str(obj["description"])
                comments = tuple(str(c["text"]) for c in obj["comments"])
            except (KeyError, TypeError, ValueError) as err:
                raise CorpusError(line_no, f"bad record: {err}") from err
            if bug_id in out:
                raise CorpusError(line_no, f"duplicate bug id {bug_id}")
            out[bug_id] = BugTexts(bug_id, description, comments)
    return [out[bug_id] for bug_id in sorted(out)]
