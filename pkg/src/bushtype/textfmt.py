"""Strict tokenizing shared by the line-oriented artifact formats.

Artifacts are written canonically (single spaces, ``\\n`` line ends, printable
ASCII), so the readers reject anything else rather than normalising it.
"""

from __future__ import annotations

import re

from .errors import ParseError

_UINT = re.compile(r"[0-9]+")


def split_lines(text: str) -> list[str]:
    """Split on ``\\n`` and reject control or non-ASCII characters with line/column."""
    rows = text.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    for lineno, row in enumerate(rows, start=1):
        for col, ch in enumerate(row, start=1):
            if not " " <= ch <= "~":
                raise ParseError(f"invalid character {ch!r} at column {col}", lineno)
    return rows


def uint(tok: str, lineno: int | None = None, what: str = "entry") -> int:
    if not _UINT.fullmatch(tok):
        raise ParseError(f"bad {what} {tok[:20]!r}", lineno)
    return int(tok)


def uint_list(text: str, sep: str = " ", lineno: int | None = None, what: str = "entry") -> tuple[int, ...]:
    """Non-negative integers separated by exactly one ``sep``; the empty string is the empty list."""
    if text == "":
        return ()
    return tuple(uint(tok, lineno, what) for tok in text.split(sep))


def field_value(rest: str, lineno: int | None = None) -> str:
    """The text after ``KEY:``, which is either empty or one space followed by the value."""
    if rest in ("", " "):
        return ""
    if not rest.startswith(" ") or rest[1] == " " or rest.endswith(" "):
        raise ParseError("field value must follow ': ' with single spacing", lineno)
    return rest[1:]
