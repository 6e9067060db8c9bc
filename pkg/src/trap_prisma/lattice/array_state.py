"""
Occupancy and corruption of the static and dynamic trap layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np
from jaxtyping import Float, Int

from trap_prisma.lattice.grid import GridSpec, TrapIndex, target_region

EMPTY = -1


class Atom(NamedTuple):
    id: int
    corruption: float


@dataclass(frozen=True)
class Configuration:
    """Detected atom positions in the static layer."""

    spec: GridSpec
    positions: frozenset[TrapIndex]

    def __post_init__(self):
        for index in self.positions:
            if not self.spec.contains(index):
                raise ValueError(f"Position {index} lies outside the {self.spec.width}x{self.spec.height} grid")

    @classmethod
    def from_positions(cls, spec: GridSpec, positions: Iterable[tuple[int, int]]) -> "Configuration":
        positions = [TrapIndex(*p) for p in positions]
        unique = frozenset(positions)
        if len(unique) != len(positions):
            raise ValueError("Configuration contains duplicate positions")
        return cls(spec, unique)

    def __len__(self) -> int:
        return len(self.positions)

    def __contains__(self, index) -> bool:
        return TrapIndex(*index) in self.positions

    def contains_target(self) -> bool:
        return target_region(self.spec) <= self.positions

    def sorted_positions(self) -> list[TrapIndex]:
        return sorted(self.positions, key=lambda p: (p.row, p.col))


@dataclass
class ArrayState:
    """
    Static and dynamic layers of the trap array.

    Each layer stores an atom id per trap (`EMPTY` when vacant) and the atom's
    corruption, i.e. its survival probability given its control history. Arrays are
    indexed [row, col].
    """

    spec: GridSpec
    static_ids: Int[np.ndarray, "height width"]
    static_corruption: Float[np.ndarray, "height width"]
    dynamic_ids: Int[np.ndarray, "height width"]
    dynamic_corruption: Float[np.ndarray, "height width"]
    next_id: int = field(default=0)

    @classmethod
    def empty(cls, spec: GridSpec) -> "ArrayState":
        shape = (spec.height, spec.width)
        return cls(
            spec=spec,
            static_ids=np.full(shape, EMPTY, dtype=np.int64),
            static_corruption=np.zeros(shape, dtype=np.float64),
            dynamic_ids=np.full(shape, EMPTY, dtype=np.int64),
            dynamic_corruption=np.zeros(shape, dtype=np.float64),
        )

    @classmethod
    def from_occupancy(cls, spec: GridSpec, occupied: np.ndarray) -> "ArrayState":
        """Static layer from a boolean [row, col] mask. Ids are assigned row-major."""
        occupied = np.asarray(occupied, dtype=bool)
        if occupied.shape != (spec.height, spec.width):
            raise ValueError(
                f"Occupancy shape {occupied.shape} does not match grid ({spec.height}, {spec.width})"
            )
        state = cls.empty(spec)
        n_atoms = int(occupied.sum())
        state.static_ids[occupied] = np.arange(n_atoms)
        state.static_corruption[occupied] = 1.0
        state.next_id = n_atoms
        return state

    @classmethod
    def from_configuration(cls, config: Configuration) -> "ArrayState":
        spec = config.spec
        occupied = np.zeros((spec.height, spec.width), dtype=bool)
        for col, row in config.positions:
            occupied[row, col] = True
        return cls.from_occupancy(spec, occupied)

    def copy(self) -> "ArrayState":
        return ArrayState(
            spec=self.spec,
            static_ids=self.static_ids.copy(),
            static_corruption=self.static_corruption.copy(),
            dynamic_ids=self.dynamic_ids.copy(),
            dynamic_corruption=self.dynamic_corruption.copy(),
            next_id=self.next_id,
        )

    @property
    def static_occupied(self) -> np.ndarray:
        return self.static_ids != EMPTY

    @property
    def dynamic_occupied(self) -> np.ndarray:
        return self.dynamic_ids != EMPTY

    @property
    def n_static(self) -> int:
        return int(np.count_nonzero(self.static_occupied))

    @property
    def n_dynamic(self) -> int:
        return int(np.count_nonzero(self.dynamic_occupied))

    @property
    def n_atoms(self) -> int:
        return self.n_static + self.n_dynamic

    def static_atom(self, index: TrapIndex) -> Optional[Atom]:
        col, row = index
        atom_id = int(self.static_ids[row, col])
        if atom_id == EMPTY:
            return None
        return Atom(atom_id, float(self.static_corruption[row, col]))

    def dynamic_atom(self, index: TrapIndex) -> Optional[Atom]:
        col, row = index
        atom_id = int(self.dynamic_ids[row, col])
        if atom_id == EMPTY:
            return None
        return Atom(atom_id, float(self.dynamic_corruption[row, col]))

    def column_rows(self, col: int) -> list[int]:
        """Rows holding a static atom in column `col`, ascending."""
        return np.flatnonzero(self.static_ids[:, col] != EMPTY).tolist()

    def column_counts(self) -> np.ndarray:
        return np.count_nonzero(self.static_occupied, axis=0)

    def configuration(self) -> Configuration:
        rows, cols = np.nonzero(self.static_occupied)
        return Configuration(
            self.spec, frozenset(TrapIndex(int(c), int(r)) for r, c in zip(rows, cols))
        )

    def contains_target(self) -> bool:
        rows = self.spec.target_rows
        cols = self.spec.target_cols
        block = self.static_occupied[rows.start:rows.stop, cols.start:cols.stop]
        return bool(block.all())


def column_view(state: ArrayState, col: int) -> list[bool]:
    """Row-ordered snapshot (row 0 first) of static occupancy in column `col`."""
    if not 0 <= col < state.spec.width:
        raise IndexError(f"Column {col} out of range for grid of width {state.spec.width}")
    return state.static_occupied[:, col].tolist()
