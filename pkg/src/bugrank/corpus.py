"""Bug corpus: record schema, JSONL loading/saving, text cleaning, heat scoring.

The corpus file is UTF-8 JSON Lines, one object per line:

    {"id": 45702, "reported_on": "mono", "created_at": "2017-01-05T10:00:00+00:00",
     "description": "...", "comments": [{"ts": "...", "text": "..."}],
     "affected": [{"ts": "...", "package": "mono"}, {"ts": null, "package": "banshee"}],
     "heat_snapshots": [{"crawl_date": "2019-11-01", "heat": 16}],
     "attrs": {"is_private": false, "is_security": false, "duplicate_count": 0,
               "affected_users": 2, "subscriber_count": 4}}

``attrs`` is optional; all other keys are required and unknown keys are
rejected. Affected entries with a null timestamp inherit ``created_at``,
so downstream code never sees a missing timestamp.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from .errors import UserDataError

HEAT_PRIVATE = 150
HEAT_SECURITY = 250
HEAT_PER_DUPLICATE = 6
HEAT_PER_AFFECTED_USER = 4
HEAT_PER_SUBSCRIBER = 2

RECORD_KEYS = {
    "id",
    "reported_on",
    "created_at",
    "description",
    "comments",
    "affected",
    "heat_snapshots",
    "attrs",
}
ATTR_KEYS = {
    "is_private",
    "is_security",
    "duplicate_count",
    "affected_users",
    "subscriber_count",
}


class MalformedLine(UserDataError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(UserDataError):
    def __init__(self, bug_id: int):
        super().__init__(f"duplicate bug id {bug_id}")
        self.bug_id = bug_id


@dataclass(frozen=True)
class HeatAttributes:
    is_private: bool
    is_security: bool
    duplicate_count: int
    affected_users: int
    subscriber_count: int

    def __post_init__(self):
        for name in ("duplicate_count", "affected_users", "subscriber_count"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class BugRecord:
    id: int
    reported_on: str
    created_at: datetime
    description: str
    comments: tuple[tuple[datetime, str], ...]
    affected: tuple[tuple[datetime, str], ...]
    heat_snapshots: tuple[tuple[date, int], ...]
    attrs: HeatAttributes | None = None

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError(f"bug id must be positive, got {self.id}")
        times = [ts for ts, _ in self.comments]
        if any(a > b for a, b in zip(times, times[1:])):
            raise ValueError(f"bug {self.id}: comments not sorted by timestamp")
        if any(heat < 0 for _, heat in self.heat_snapshots):
            raise ValueError(f"bug {self.id}: negative heat snapshot")


@dataclass(frozen=True)
class Corpus:
    records: tuple[BugRecord, ...]
    provenance: str = ""
    _by_id: dict[int, BugRecord] = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        by_id: dict[int, BugRecord] = {}
        for rec in self.records:
            if rec.id in by_id:
                raise DuplicateId(rec.id)
            by_id[rec.id] = rec
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, bug_id: int) -> BugRecord | None:
        return self._by_id.get(bug_id)

    def ids(self) -> list[int]:
        return [rec.id for rec in self.records]


def compute_heat(attrs: HeatAttributes) -> int:
    """Additive heat score: privacy and security flags plus per-count weights."""
    return (
        HEAT_PRIVATE * int(attrs.is_private)
        + HEAT_SECURITY * int(attrs.is_security)
        + HEAT_PER_DUPLICATE * attrs.duplicate_count
        + HEAT_PER_AFFECTED_USER * attrs.affected_users
        + HEAT_PER_SUBSCRIBER * attrs.subscriber_count
    )


_URL_RE = re.compile(r"(?:https?|ftp)://\S+|\bwww\.\S+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
_FRAME_RES = (
    re.compile(r"^\s*#\d+"),              # gdb/backtrace frames
    re.compile(r"^\s*at\s+[A-Za-z_][\w.$]*\("),  # Java/JS style frames
    re.compile(r'^\s*File\s+"'),          # Python tracebacks
)


def _is_code_like(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    if any(pat.match(line) for pat in _FRAME_RES):
        return True
    non_alpha = sum(1 for ch in stripped if not ch.isalpha())
    return non_alpha / len(stripped) >= 0.40


def _strip_code_blocks(text: str) -> str:
    lines = text.split("\n")
    flags = [_is_code_like(line) for line in lines]
    keep = []
    i = 0
    while i < len(lines):
        if flags[i]:
            j = i
            while j < len(lines) and flags[j]:
                j += 1
            if j - i >= 2:  # only runs of two or more lines count as a block
                i = j
                continue
        keep.append(lines[i])
        i += 1
    return "\n".join(keep)


def clean_text(raw: str) -> str:
    """Strip URLs, email addresses and stack-trace/code blocks; collapse whitespace.

    Idempotent and never longer than the input.
    """
    text = raw
    while True:
        out = _strip_code_blocks(text)
        out = _URL_RE.sub("", out)
        out = _EMAIL_RE.sub("", out)
        out = " ".join(out.split())
        if out == text:
            return out
        text = out


def comment_window(record: BugRecord, window_end: datetime) -> list[str]:
    """Comment texts posted at or before ``window_end``, original order."""
    return [text for ts, text in record.comments if ts <= window_end]


def parse_timestamp(raw: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    value = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_record(obj: dict, line_no: int) -> BugRecord:
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "not a JSON object")
    unknown = set(obj) - RECORD_KEYS
    if unknown:
        raise MalformedLine(line_no, f"unknown keys {sorted(unknown)}")
    for key in RECORD_KEYS - {"attrs"}:
        if key not in obj:
            raise MalformedLine(line_no, f"missing {key}")
    try:
        bug_id = obj["id"]
        if not isinstance(bug_id, int) or isinstance(bug_id, bool) or bug_id <= 0:
            raise ValueError(f"id must be a positive integer, got {bug_id!r}")
        if not isinstance(obj["reported_on"], str):
            raise ValueError("reported_on must be a string")
        if not isinstance(obj["description"], str):
            raise ValueError("description must be a string")
        created_at = parse_timestamp(obj["created_at"])
        comments = tuple(
            (parse_timestamp(c["ts"]), str(c["text"])) for c in obj["comments"]
        )
        affected = tuple(
            (parse_timestamp(a["ts"]) if a["ts"] is not None else created_at, str(a["package"]))
            for a in obj["affected"]
        )
        snapshots = tuple(
            (date.fromisoformat(s["crawl_date"]), int(s["heat"]))
            for s in obj["heat_snapshots"]
        )
        attrs = None
        if obj.get("attrs") is not None:
            raw_attrs = obj["attrs"]
            unknown_attrs = set(raw_attrs) - ATTR_KEYS
            if unknown_attrs:
                raise ValueError(f"unknown attrs keys {sorted(unknown_attrs)}")
            missing_attrs = ATTR_KEYS - set(raw_attrs)
            if missing_attrs:
                raise ValueError(f"missing attrs keys {sorted(missing_attrs)}")
            attrs = HeatAttributes(
                is_private=bool(raw_attrs["is_private"]),
                is_security=bool(raw_attrs["is_security"]),
                duplicate_count=int(raw_attrs["duplicate_count"]),
                affected_users=int(raw_attrs["affected_users"]),
                subscriber_count=int(raw_attrs["subscriber_count"]),
            )
        return BugRecord(
            id=bug_id,
            reported_on=obj["reported_on"],
            created_at=created_at,
            description=obj["description"],
            comments=comments,
            affected=affected,
            heat_snapshots=snapshots,
            attrs=attrs,
        )
    except MalformedLine:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedLine(line_no, str(exc)) from exc


def load_corpus(path: str | Path, provenance: str | None = None) -> Corpus:
    """Load a JSONL corpus; rejects malformed lines and duplicate ids."""
    path = Path(path)
    records: list[BugRecord] = []
    seen: set[int] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from exc
            rec = _parse_record(obj, line_no)
            if rec.id in seen:
                raise DuplicateId(rec.id)
            seen.add(rec.id)
            records.append(rec)
    return Corpus(tuple(records), provenance if provenance is not None else str(path))


def record_to_obj(rec: BugRecord) -> dict:
    obj = {
        "id": rec.id,
        "reported_on": rec.reported_on,
        "created_at": format_timestamp(rec.created_at),
        "description": rec.description,
        "comments": [{"ts": format_timestamp(ts), "text": text} for ts, text in rec.comments],
        "affected": [{"ts": format_timestamp(ts), "package": pkg} for ts, pkg in rec.affected],
        "heat_snapshots": [
            {"crawl_date": d.isoformat(), "heat": heat} for d, heat in rec.heat_snapshots
        ],
    }
    if rec.attrs is not None:
        obj["attrs"] = {
            "is_private": rec.attrs.is_private,
            "is_security": rec.attrs.is_security,
            "duplicate_count": rec.attrs.duplicate_count,
            "affected_users": rec.attrs.affected_users,
            "subscriber_count": rec.attrs.subscriber_count,
        }
    return obj


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(json.dumps(record_to_obj(rec), ensure_ascii=False) + "\n")


def heat_mismatches(corpus: Corpus) -> list[tuple[int, int, list[int]]]:
    """Records whose recomputed heat matches none of their snapshots.

    Returns (bug id, recomputed heat, snapshot heats) per mismatching record;
    records without attrs are skipped.
    """
    out = []
    for rec in corpus:
        if rec.attrs is None:
            continue
        recomputed = compute_heat(rec.attrs)
        snapshot_heats = [heat for _, heat in rec.heat_snapshots]
        if recomputed not in snapshot_heats:
            out.append((rec.id, recomputed, snapshot_heats))
    return out


def corpus_stats(corpus: Corpus) -> dict:
    """Descriptive statistics over the corpus (counts and text sizes)."""
    n = len(corpus)
    comment_counts = [len(rec.comments) for rec in corpus]
    desc_words = [len(rec.description.split()) for rec in corpus]
    comment_words = [len(text.split()) for rec in corpus for _, text in rec.comments]
    affected_counts = [len({pkg for _, pkg in rec.affected}) for rec in corpus]
    return {
        "bugs": n,
        "mean_comments": sum(comment_counts) / n if n else 0.0,
        "mean_description_words": sum(desc_words) / n if n else 0.0,
        "max_description_words": max(desc_words, default=0),
        "mean_comment_words": (
            sum(comment_words) / len(comment_words) if comment_words else 0.0
        ),
        "max_comment_words": max(comment_words, default=0),
        "mean_affected_packages": sum(affected_counts) / n if n else 0.0,
    }
