"""
Elementary control operations, parallel batches and lossless state transitions.

Transfers (extraction, implantation) move an atom between the static and dynamic
layers at one trap; displacements step a dynamic trap by one lattice unit. No-ops are
implicit: any atom a batch does not address idles for the batch's duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Union

from trap_prisma.lattice.array_state import EMPTY, ArrayState
from trap_prisma.lattice.grid import TrapIndex
from trap_prisma.control.accounting import OpCounts


class ContractError(RuntimeError):
    """A planner emitted an operation whose preconditions do not hold."""


class Axis(str, Enum):
    X = "x"
    Y = "y"


class BatchKind(str, Enum):
    TRANSFER = "transfer"
    DISPLACEMENT = "displacement"


@dataclass(frozen=True)
class Extract:
    at: TrapIndex
    name = "extract"


@dataclass(frozen=True)
class Implant:
    at: TrapIndex
    name = "implant"


@dataclass(frozen=True)
class Step:
    axis: Axis
    sign: int
    at: TrapIndex
    name = "step"

    @property
    def destination(self) -> TrapIndex:
        col, row = self.at
        if self.axis == Axis.X:
            return TrapIndex(col + self.sign, row)
        return TrapIndex(col, row + self.sign)


@dataclass(frozen=True)
class NoOp:
    name = "noop"


ElementaryOp = Union[Extract, Implant, Step, NoOp]


@dataclass(frozen=True)
class Batch:
    """Operations executed simultaneously on a sub-row or sub-column of traps."""

    kind: BatchKind
    ops: tuple

    def __post_init__(self):
        if not self.ops:
            raise ValueError("A batch must contain at least one operation")
        allowed = (Extract, Implant) if self.kind == BatchKind.TRANSFER else (Step,)
        for op in self.ops:
            if not isinstance(op, allowed):
                raise ValueError(f"{type(op).__name__} cannot appear in a {self.kind.value} batch")

    @classmethod
    def extract(cls, traps: Iterable[TrapIndex]) -> "Batch":
        return cls(BatchKind.TRANSFER, tuple(Extract(TrapIndex(*t)) for t in traps))

    @classmethod
    def implant(cls, traps: Iterable[TrapIndex]) -> "Batch":
        return cls(BatchKind.TRANSFER, tuple(Implant(TrapIndex(*t)) for t in traps))

    @classmethod
    def step(cls, axis: Axis, sign: int, traps: Iterable[TrapIndex]) -> "Batch":
        return cls(BatchKind.DISPLACEMENT, tuple(Step(axis, sign, TrapIndex(*t)) for t in traps))

    @property
    def traps(self) -> list[TrapIndex]:
        return [op.at for op in self.ops]

    @property
    def direction(self) -> Optional[tuple[Axis, int]]:
        if self.kind != BatchKind.DISPLACEMENT:
            return None
        return self.ops[0].axis, self.ops[0].sign

    def duration(self, params) -> float:
        return params.t_alpha if self.kind == BatchKind.TRANSFER else params.t_nu


@dataclass
class ActuationSequence:
    """Ordered batches of one actuation step."""

    batches: list[Batch] = field(default_factory=list)

    def append(self, batch: Batch) -> None:
        self.batches.append(batch)

    def extend(self, other: Union["ActuationSequence", Iterable[Batch]]) -> None:
        self.batches.extend(other.batches if isinstance(other, ActuationSequence) else other)

    def __iter__(self) -> Iterator[Batch]:
        return iter(self.batches)

    def __len__(self) -> int:
        return len(self.batches)

    def __bool__(self) -> bool:
        return bool(self.batches)

    def duration(self, params) -> float:
        return sum(batch.duration(params) for batch in self.batches)


@dataclass(frozen=True)
class BatchViolation:
    at: Optional[TrapIndex]
    reason: str

    def __str__(self) -> str:
        return f"{self.reason} at {tuple(self.at)}" if self.at is not None else self.reason


def _chain_violation(traps: list[TrapIndex]) -> Optional[BatchViolation]:
    if len(set(traps)) != len(traps):
        seen = set()
        for trap in traps:
            if trap in seen:
                return BatchViolation(trap, "trap addressed twice")
            seen.add(trap)
    cols = {t.col for t in traps}
    rows = {t.row for t in traps}
    if len(cols) > 1 and len(rows) > 1:
        return BatchViolation(traps[1], "not a sub-row or sub-column")
    return None


def validate_batch(batch: Batch, state: ArrayState) -> Optional[BatchViolation]:
    """Returns the first violation of the chain constraint or a layer precondition, else None."""
    spec = state.spec
    traps = batch.traps
    violation = _chain_violation(traps)
    if violation is not None:
        return violation

    for op in batch.ops:
        if not spec.contains(op.at):
            return BatchViolation(op.at, "trap outside grid")

    if batch.kind == BatchKind.DISPLACEMENT:
        axis, sign = batch.direction
        moving = set(traps)
        for op in batch.ops:
            if (op.axis, op.sign) != (axis, sign):
                return BatchViolation(op.at, "mixed displacement directions")
            if sign not in (-1, 1):
                return BatchViolation(op.at, f"invalid step sign {sign}")
            col, row = op.at
            if state.dynamic_ids[row, col] == EMPTY:
                return BatchViolation(op.at, "no dynamic atom to displace")
            dest = op.destination
            if not spec.contains(dest):
                return BatchViolation(op.at, "destination outside grid")
            if state.dynamic_ids[dest.row, dest.col] != EMPTY and dest not in moving:
                return BatchViolation(dest, "destination dynamic trap occupied")
        return None

    for op in batch.ops:
        col, row = op.at
        if isinstance(op, Extract):
            if state.static_ids[row, col] == EMPTY:
                return BatchViolation(op.at, "no static atom to extract")
            if state.dynamic_ids[row, col] != EMPTY:
                return BatchViolation(op.at, "dynamic trap already occupied")
        elif state.dynamic_ids[row, col] == EMPTY:
            return BatchViolation(op.at, "no dynamic atom to implant")
    return None


def apply_batch(
    state: ArrayState,
    batch: Batch,
    *,
    in_place: bool = False,
    strict: bool = True,
) -> tuple[ArrayState, OpCounts]:
    """
    Executes a batch without loss.

    Implanting onto an occupied static trap removes both atoms. With `strict=False`,
    operations addressing a vacant trap are skipped instead of raising, which is how
    protocols run when atoms are lost between batches.

    Returns:
        The new state (the same object when `in_place`) and the operation counts.
    """
    if strict:
        violation = validate_batch(batch, state)
        if violation is not None:
            raise ContractError(f"Cannot apply {batch.kind.value} batch: {violation}")
    if not in_place:
        state = state.copy()

    counts = OpCounts()
    if batch.kind == BatchKind.DISPLACEMENT:
        _apply_steps(state, batch, counts)
        counts.batches_displacement = 1
        return state, counts

    for op in batch.ops:
        col, row = op.at
        if isinstance(op, Extract):
            atom_id = state.static_ids[row, col]
            if atom_id == EMPTY or state.dynamic_ids[row, col] != EMPTY:
                continue
            state.dynamic_ids[row, col] = atom_id
            state.dynamic_corruption[row, col] = state.static_corruption[row, col]
            state.static_ids[row, col] = EMPTY
            state.static_corruption[row, col] = 0.0
        else:
            atom_id = state.dynamic_ids[row, col]
            if atom_id == EMPTY:
                continue
            if state.static_ids[row, col] != EMPTY:
                counts.annihilations += 1
                state.static_ids[row, col] = EMPTY
                state.static_corruption[row, col] = 0.0
            else:
                state.static_ids[row, col] = atom_id
                state.static_corruption[row, col] = state.dynamic_corruption[row, col]
            state.dynamic_ids[row, col] = EMPTY
            state.dynamic_corruption[row, col] = 0.0
        counts.transfers += 1
        counts.per_atom_transfers[int(atom_id)] += 1
    counts.batches_transfer = 1
    return state, counts


def _apply_steps(state: ArrayState, batch: Batch, counts: OpCounts) -> None:
    carried = []
    for op in batch.ops:
        col, row = op.at
        atom_id = state.dynamic_ids[row, col]
        if atom_id == EMPTY:
            continue
        carried.append((op.destination, atom_id, state.dynamic_corruption[row, col]))
        state.dynamic_ids[row, col] = EMPTY
        state.dynamic_corruption[row, col] = 0.0
    for dest, atom_id, corruption in carried:
        state.dynamic_ids[dest.row, dest.col] = atom_id
        state.dynamic_corruption[dest.row, dest.col] = corruption
        counts.displacements += 1
        counts.per_atom_displacements[int(atom_id)] += 1


def apply_sequence(
    state: ArrayState,
    sequence: ActuationSequence,
    *,
    in_place: bool = False,
) -> tuple[ArrayState, OpCounts]:
    """Applies every batch of `sequence` losslessly, accumulating counts."""
    if not in_place:
        state = state.copy()
    total = OpCounts()
    for batch in sequence:
        state, counts = apply_batch(state, batch, in_place=True)
        total += counts
    return state, total
