"""
Grid geometry of the static trap array and its centered target block.

Indexing is 0-based everywhere, (col, row) with row 0 at the top. A "column" is the
set of traps sharing `col` and runs vertically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple


class TrapIndex(NamedTuple):
    col: int
    row: int


@dataclass(frozen=True)
class GridSpec:
    """
    Static trap array of `width` x `height` traps with a centered target block of
    `target_width` x `target_height` traps.

    When a margin cannot be split evenly, the extra external row goes below the
    target block (larger row indices) and the extra external column goes to the right.
    """

    width: int
    height: int
    target_width: int
    target_height: int

    def __post_init__(self):
        for name in ("width", "height", "target_width", "target_height"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer. Got {value}")
        if self.target_width > self.width:
            raise ValueError(
                f"target_width ({self.target_width}) exceeds width ({self.width})"
            )
        if self.target_height > self.height:
            raise ValueError(
                f"target_height ({self.target_height}) exceeds height ({self.height})"
            )

    @classmethod
    def chain(cls, n_traps: int, n_target: int) -> "GridSpec":
        """A 1D chain of `n_traps` traps, laid out as a single column."""
        return cls(width=1, height=n_traps, target_width=1, target_height=n_target)

    @classmethod
    def square_target(cls, side: int, height: int) -> "GridSpec":
        """A `side` x `side` target in an array `side` traps wide and `height` tall."""
        return cls(width=side, height=height, target_width=side, target_height=side)

    @property
    def n_traps(self) -> int:
        return self.width * self.height

    @property
    def n_target(self) -> int:
        return self.target_width * self.target_height

    @property
    def overhead(self) -> float:
        return self.n_traps / self.n_target

    @property
    def top_margin(self) -> int:
        return (self.height - self.target_height) // 2

    @property
    def left_margin(self) -> int:
        return (self.width - self.target_width) // 2

    @property
    def target_rows(self) -> range:
        return range(self.top_margin, self.top_margin + self.target_height)

    @property
    def target_cols(self) -> range:
        return range(self.left_margin, self.left_margin + self.target_width)

    def contains(self, index: TrapIndex) -> bool:
        col, row = index
        return 0 <= col < self.width and 0 <= row < self.height

    def in_target(self, index: TrapIndex) -> bool:
        col, row = index
        return col in self.target_cols and row in self.target_rows

    def is_external_row(self, row: int) -> bool:
        return row not in self.target_rows

    def desired_count(self, col: int) -> int:
        """Number of target traps in column `col`."""
        return self.target_height if col in self.target_cols else 0

    def column_targets(self, col: int) -> list[int]:
        return list(self.target_rows) if col in self.target_cols else []

    def side_of(self, row: int) -> int:
        """-1 if `row` is above the target band (or its upper half), +1 otherwise."""
        rows = self.target_rows
        if row < rows.start:
            return -1
        if row >= rows.stop:
            return 1
        # Inside the band (only reachable for columns outside the target block).
        return -1 if (row - rows.start) < (rows.stop - row) else 1

    def distance_to_target_band(self, row: int) -> int:
        rows = self.target_rows
        if row < rows.start:
            return rows.start - row
        if row >= rows.stop:
            return row - rows.stop + 1
        return 0

    def indices(self) -> Iterator[TrapIndex]:
        for row in range(self.height):
            for col in range(self.width):
                yield TrapIndex(col, row)


def target_region(spec: GridSpec) -> frozenset[TrapIndex]:
    """Traps of the centered target block."""
    return frozenset(
        TrapIndex(col, row) for row in spec.target_rows for col in spec.target_cols
    )
