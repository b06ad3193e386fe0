"""Source positions and ranges.

A position names a point between bytes of a buffer: `line` is 1-based,
`col` counts bytes from the start of the line (0-based), and `offset` is
the absolute byte index.  Ranges are half-open `[start, end)` pairs.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Position:
    line: int
    col: int
    offset: int

    def __repr__(self) -> str:
        return f"{self.line}:{self.col}"


ORIGIN = Position(1, 0, 0)

Range = tuple[Position, Position]


def advance(pos: Position, text: str) -> Position:
    """Position after reading `text` starting at `pos`."""
    nl = text.count("\n")
    if nl == 0:
        return Position(pos.line, pos.col + len(text), pos.offset + len(text))
    tail = len(text) - text.rfind("\n") - 1
    return Position(pos.line + nl, tail, pos.offset + len(text))


class LineTable:
    """Offset <-> position conversion for one buffer snapshot."""

    def __init__(self, text: str):
        self.text = text
        starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                starts.append(i + 1)
        self._starts = starts

    def position(self, offset: int) -> Position:
        if offset < 0:
            raise ValueError(f"negative offset {offset}")
        line = bisect.bisect_right(self._starts, offset)
        return Position(line, offset - self._starts[line - 1], offset)

    def contains(self, rng: Range, pos: Position) -> bool:
        return rng[0].offset <= pos.offset < rng[1].offset


def zero_width(pos: Position) -> Range:
    return (pos, pos)


def range_covers(outer: Range, inner: Range) -> bool:
    return outer[0].offset <= inner[0].offset and inner[1].offset <= outer[1].offset


_PHASE_ORDER = {"lex": 0, "parse": 1, "type": 2}


@dataclass(frozen=True)
class Diagnostic:
    """A located problem from any phase; phases are `lex`, `parse`, `type`."""

    phase: str
    message: str
    start: Position
    end: Position

    def sort_key(self) -> tuple:
        return (self.start.offset, _PHASE_ORDER.get(self.phase, 9), self.end.offset, self.message)
