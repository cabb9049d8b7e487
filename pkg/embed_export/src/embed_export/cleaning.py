"""Text cleanup applied before encoding.

Mirrors the consumer pipeline's heuristics: URLs, email addresses and
runs of two or more code-like lines (stack frames, symbol-heavy lines)
are dropped, then whitespace collapses to single spaces.
"""

from __future__ import annotations

import re

_URL_RE = re.compile(r"(?:https?|ftp)://\S+|\bwww\.\S+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
_FRAME_RES = (
    re.compile(r"^\s*#\d+"),
    re.compile(r"^\s*at\s+[A-Za-z_][\w.$]*\("),
    re.compile(r'^\s*File\s+"'),
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
            if j - i >= 2:
                i = j
                continue
        keep.append(lines[i])
        i += 1
    return "\n".join(keep)


def clean_text(raw: str) -> str:
    text = raw
    while True:
        out = _strip_code_blocks(text)
        out = _URL_RE.sub("", out)
        out = _EMAIL_RE.sub("", out)
        out = " ".join(out.split())
        if out == text:
            return out
        text = out
