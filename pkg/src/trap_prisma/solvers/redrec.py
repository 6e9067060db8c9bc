"""
Red-rec: column-wise reconfiguration with redistribution of surplus atoms between
donor and receiver columns along open external rows.

The planner works on a lossless copy of the measured state. Each emitted sequence is
applied to that copy before the next one is planned, so every later decision sees the
positions the earlier batches produce.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from trap_prisma.control.operations import ActuationSequence, Axis, Batch, apply_sequence
from trap_prisma.lattice.array_state import EMPTY, ArrayState
from trap_prisma.lattice.grid import GridSpec, TrapIndex
from trap_prisma.solvers.chain_exact import ChainLocator, ChainProblem, plan_to_sequence, solve_chain

logger = logging.getLogger(__name__)

ABOVE, BELOW = -1, 1


class ColumnClass(str, Enum):
    DONOR = "donor"
    RECEIVER = "receiver"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class ColumnLedger:
    measured: tuple[int, ...]
    desired: tuple[int, ...]

    @property
    def imbalance(self) -> tuple[int, ...]:
        return tuple(m - d for m, d in zip(self.measured, self.desired))

    @property
    def classes(self) -> tuple[ColumnClass, ...]:
        return tuple(self.column_class(col) for col in range(len(self.measured)))

    @property
    def total_imbalance(self) -> int:
        return sum(self.imbalance)

    def column_class(self, col: int) -> ColumnClass:
        value = self.measured[col] - self.desired[col]
        if value > 0:
            return ColumnClass.DONOR
        if value < 0:
            return ColumnClass.RECEIVER
        return ColumnClass.NEUTRAL

    def _of_class(self, cls: ColumnClass) -> list[int]:
        return [col for col in range(len(self.measured)) if self.column_class(col) == cls]

    @property
    def donors(self) -> list[int]:
        return self._of_class(ColumnClass.DONOR)

    @property
    def receivers(self) -> list[int]:
        return self._of_class(ColumnClass.RECEIVER)

    @property
    def neutral(self) -> list[int]:
        return self._of_class(ColumnClass.NEUTRAL)


def classify_columns(state: ArrayState, spec: Optional[GridSpec] = None) -> ColumnLedger:
    spec = spec or state.spec
    measured = tuple(int(n) for n in state.column_counts())
    desired = tuple(spec.desired_count(col) for col in range(spec.width))
    return ColumnLedger(measured, desired)


def pair_columns(ledger: ColumnLedger) -> list[tuple[int, int]]:
    """
    Orders (donor, receiver) pairs for redistribution.

    Adjacent pairs where the donor can fully satisfy the receiver come first, scanning
    left to right. The remaining pairs are then chosen greedily by the number of atoms
    they can exchange (descending), column distance (ascending) and donor index
    (ascending). Residual surpluses and deficits are updated after every chosen pair.
    """
    residual = list(ledger.imbalance)
    pairs = []

    for left in range(len(residual) - 1):
        right = left + 1
        for donor, receiver in ((left, right), (right, left)):
            if residual[donor] > 0 and residual[receiver] < 0 and residual[donor] >= -residual[receiver]:
                pairs.append((donor, receiver))
                residual[donor] += residual[receiver]
                residual[receiver] = 0

    while True:
        candidates = [
            (min(residual[d], -residual[r]), abs(d - r), d, r)
            for d in range(len(residual)) if residual[d] > 0
            for r in range(len(residual)) if residual[r] < 0
        ]
        if not candidates:
            break
        exchange, _, donor, receiver = min(candidates, key=lambda c: (-c[0], c[1], c[2]))
        pairs.append((donor, receiver))
        residual[donor] -= exchange
        residual[receiver] += exchange
    return pairs


def redistribution_side(spec: GridSpec, row: int) -> int:
    """
    Side of the target band an atom leaves from. Rows inside the band (columns outside
    the target block) go to the nearer side that has external rows.
    """
    side = spec.side_of(row)
    if side == ABOVE and spec.top_margin == 0:
        return BELOW
    if side == BELOW and spec.target_rows.stop == spec.height:
        return ABOVE
    return side


@dataclass(frozen=True)
class DonorLabeling:
    """
    Partition of a donor column's atoms (by row). `redistributed` is in selection
    order; `open_rows` maps each redistributed atom that found a row to it and
    `deferred` holds those left for a repeated sequence.
    """

    donor: int
    reconfigured: tuple[int, ...]
    redistributed: tuple[int, ...]
    idle: tuple[int, ...]
    open_rows: Mapping[int, int] = field(default_factory=dict)
    deferred: tuple[int, ...] = ()

    @property
    def assigned(self) -> tuple[int, ...]:
        return tuple(row for row in self.redistributed if row in self.open_rows)


def label_donor(
    state: ArrayState,
    spec: Optional[GridSpec],
    donor: int,
    quota: int,
    capacity: Optional[Mapping[int, int]] = None,
) -> DonorLabeling:
    """
    Splits a donor column into atoms that fill its target traps, atoms sent to a
    receiver and atoms left idle.

    Redistributed atoms are taken farthest from the target band first, alternating
    above and below starting above. `capacity` optionally caps how many atoms may leave
    from each side (keyed by `ABOVE`/`BELOW`); the alternation then continues on the
    side that still has room.
    """
    spec = spec or state.spec
    rows = state.column_rows(donor)
    surplus = len(rows) - spec.desired_count(donor)
    if quota < 0 or quota > surplus:
        raise ValueError(
            f"Quota {quota} is invalid for column {donor} with surplus {surplus}"
        )

    plan = solve_chain(ChainProblem.build(spec.height, rows, spec.column_targets(donor)))
    reconfigured = tuple(src for src, _ in plan.assignment)
    spare = [row for row in rows if row not in set(reconfigured)]

    by_side = {
        ABOVE: sorted((r for r in spare if redistribution_side(spec, r) == ABOVE)),
        BELOW: sorted((r for r in spare if redistribution_side(spec, r) == BELOW), reverse=True),
    }
    room = {ABOVE: len(by_side[ABOVE]), BELOW: len(by_side[BELOW])}
    if capacity is not None:
        room = {side: min(room[side], capacity.get(side, 0)) for side in room}

    redistributed = []
    prefer = ABOVE
    while len(redistributed) < quota:
        order = (prefer, -prefer)
        side = next((s for s in order if room[s] > 0), None)
        if side is None:
            break
        redistributed.append(by_side[side].pop(0))
        room[side] -= 1
        prefer = -side

    chosen = set(redistributed)
    idle = tuple(row for row in spare if row not in chosen)
    return DonorLabeling(donor, reconfigured, tuple(redistributed), idle)


def open_rows(state: ArrayState, spec: Optional[GridSpec], donor: int, receiver: int) -> list[int]:
    """
    External rows along which a dynamic trap can carry an atom from the donor to the
    receiver column: no static atom strictly between the two columns and an empty
    receiver trap. The donor trap itself is not checked.
    """
    spec = spec or state.spec
    lo, hi = sorted((donor, receiver))
    occupied = state.static_ids != EMPTY
    rows = []
    for row in range(spec.height):
        if not spec.is_external_row(row):
            continue
        if occupied[row, lo + 1:hi].any() or occupied[row, receiver]:
            continue
        rows.append(row)
    return rows


def assign_open_rows(
    state: ArrayState,
    spec: Optional[GridSpec],
    donor: int,
    receiver: int,
    labeling: DonorLabeling,
) -> Optional[DonorLabeling]:
    """
    Gives each redistributed atom, in selection order, the nearest unassigned open
    row on its side of the target band; of two equally near rows the one closer to
    the band wins. Atoms left without a row are deferred.

    Returns:
        The labeling with its assignments, or None when no atom could be assigned.
    """
    spec = spec or state.spec
    free = open_rows(state, spec, donor, receiver)
    assignment = {}
    deferred = []
    for row in labeling.redistributed:
        side = redistribution_side(spec, row)
        candidates = [r for r in free if spec.side_of(r) == side]
        if not candidates:
            deferred.append(row)
            continue
        best = min(candidates, key=lambda r: (abs(r - row), spec.distance_to_target_band(r)))
        assignment[row] = best
        free.remove(best)

    if not assignment:
        return None
    return DonorLabeling(
        donor=labeling.donor,
        reconfigured=labeling.reconfigured,
        redistributed=labeling.redistributed,
        idle=labeling.idle,
        open_rows=assignment,
        deferred=tuple(deferred),
    )


def reconfigure_column(state: ArrayState, spec: Optional[GridSpec], col: int) -> ActuationSequence:
    """Exact chain reconfiguration of one column onto its own target traps."""
    spec = spec or state.spec
    problem = ChainProblem.build(spec.height, state.column_rows(col), spec.column_targets(col))
    return plan_to_sequence(solve_chain(problem), ChainLocator.column(col))


def streamlined_sequence(
    state: ArrayState,
    spec: Optional[GridSpec],
    donor: int,
    receiver: int,
    labeling: DonorLabeling,
) -> ActuationSequence:
    """
    One donor-to-receiver exchange.

    The donor column is reconfigured while the redistributed atoms are carried to
    their open rows and kept in dynamic traps; those traps then cross to the receiver
    column one lattice unit per batch, and the receiver column is reconfigured with the
    arrived atoms implanted directly. Each redistributed atom is extracted and
    implanted once.

    Within a side of the target band the redistributed atoms keep their vertical
    order, so they are paired with their open rows in sorted order.
    """
    spec = spec or state.spec
    arrivals = sorted(labeling.open_rows[row] for row in labeling.assigned)
    if not arrivals:
        raise ValueError(
            f"Column {donor} has no redistributed atom with an open row; reconfigure it on its own"
        )
    if donor == receiver:
        raise ValueError(f"Donor and receiver must differ. Got column {donor} twice")

    sequence = ActuationSequence()

    # Donor: fill the target traps and lift the redistributed atoms to their rows.
    sources = sorted(labeling.reconfigured + labeling.assigned)
    destinations = sorted(spec.column_targets(donor) + arrivals)
    donor_plan = solve_chain(ChainProblem.build(spec.height, sources, destinations))
    sequence.extend(plan_to_sequence(donor_plan, ChainLocator.column(donor), hold=arrivals))

    # Crossing: the sub-column of carried traps, one column per batch.
    sign = 1 if receiver > donor else -1
    for k in range(abs(receiver - donor)):
        col = donor + sign * k
        sequence.append(Batch.step(Axis.X, sign, (TrapIndex(col, row) for row in arrivals)))

    # Receiver: the arrived atoms are already in dynamic traps.
    receiver_sources = sorted(state.column_rows(receiver) + arrivals)
    receiver_plan = solve_chain(
        ChainProblem.build(spec.height, receiver_sources, spec.column_targets(receiver))
    )
    sequence.extend(
        plan_to_sequence(receiver_plan, ChainLocator.column(receiver), pre_extracted=arrivals)
    )
    return sequence


@dataclass
class RedRecReport:
    sequence: ActuationSequence = field(default_factory=ActuationSequence)
    exchanges: int = 0
    redistributed: int = 0
    fallback: bool = False


class _Planner:
    def __init__(self, state: ArrayState, spec: GridSpec):
        self.spec = spec
        self.state = state.copy()
        self.report = RedRecReport()

    def emit(self, sequence: ActuationSequence) -> None:
        if not sequence:
            return
        apply_sequence(self.state, sequence, in_place=True)
        self.report.sequence.extend(sequence)

    def reconfigure(self, columns) -> None:
        for col in columns:
            self.emit(reconfigure_column(self.state, self.spec, col))

    def exchange(self, donor: int, receiver: int) -> int:
        """Repeats streamlined sequences for one pair; returns the atoms moved."""
        moved = 0
        while True:
            imbalance = classify_columns(self.state, self.spec).imbalance
            quota = min(imbalance[donor], -imbalance[receiver])
            if quota <= 0:
                break
            rows = open_rows(self.state, self.spec, donor, receiver)
            if not rows:
                break
            capacity = Counter(self.spec.side_of(r) for r in rows)
            labeling = label_donor(self.state, self.spec, donor, quota, capacity=capacity)
            if not labeling.redistributed:
                break
            labeling = assign_open_rows(self.state, self.spec, donor, receiver, labeling)
            if labeling is None:
                break
            self.emit(streamlined_sequence(self.state, self.spec, donor, receiver, labeling))
            self.report.exchanges += 1
            moved += len(labeling.assigned)
        if moved:
            logger.debug("Moved %d atoms from column %d to column %d", moved, donor, receiver)
        return moved

    def pair_until_stalled(self) -> None:
        while True:
            ledger = classify_columns(self.state, self.spec)
            if not ledger.donors or not ledger.receivers:
                return
            moved = sum(self.exchange(d, r) for d, r in pair_columns(ledger))
            if not moved:
                # A receiver left unsatisfied is paired with any other donor, nearest first.
                ledger = classify_columns(self.state, self.spec)
                others = sorted(
                    ((d, r) for d in ledger.donors for r in ledger.receivers),
                    key=lambda p: (abs(p[0] - p[1]), p[0], p[1]),
                )
                for donor, receiver in others:
                    moved = self.exchange(donor, receiver)
                    if moved:
                        break
            if not moved:
                return
            self.report.redistributed += moved


def redrec_plan(state: ArrayState, spec: Optional[GridSpec] = None) -> RedRecReport:
    """
    Plans one measurement cycle: neutral columns first, then donor/receiver exchanges
    until no pair can make progress. If pairs remain stuck, every column is
    reconfigured on its own and pairing restarts, at most once per cycle. A last pass
    reconfigures each column onto its target traps.
    """
    spec = spec or state.spec
    planner = _Planner(state, spec)

    planner.reconfigure(classify_columns(planner.state, spec).neutral)
    while True:
        planner.pair_until_stalled()
        ledger = classify_columns(planner.state, spec)
        if not (ledger.donors and ledger.receivers) or planner.report.fallback:
            break
        logger.debug("No pair has an open row; reconfiguring all columns before re-pairing")
        planner.report.fallback = True
        planner.reconfigure(range(spec.width))
    planner.reconfigure(range(spec.width))

    ledger = classify_columns(planner.state, spec)
    if ledger.receivers and ledger.donors:
        logger.debug("Cycle ends with receivers %s unsatisfied", ledger.receivers)
    return planner.report


def redrec_cycle(state: ArrayState, spec: Optional[GridSpec] = None) -> ActuationSequence:
    """Planner entry point for the protocol loop."""
    return redrec_plan(state, spec).sequence
