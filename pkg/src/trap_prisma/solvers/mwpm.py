"""
Displacement-optimal baseline: minimum-weight matching of atoms to target traps under
Manhattan distance, routed as one EDI cycle per moved atom.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from trap_prisma.control.operations import ActuationSequence, Axis, Batch, ContractError, apply_batch
from trap_prisma.lattice.array_state import EMPTY, ArrayState
from trap_prisma.lattice.grid import GridSpec, TrapIndex, target_region

logger = logging.getLogger(__name__)


def manhattan(a: TrapIndex, b: TrapIndex) -> int:
    return abs(a.col - b.col) + abs(a.row - b.row)


@dataclass(frozen=True)
class AssignmentProblem:
    sources: tuple[TrapIndex, ...]
    targets: tuple[TrapIndex, ...]

    @classmethod
    def build(cls, sources: Iterable, targets: Iterable) -> "AssignmentProblem":
        # Lexicographic (col, row) order makes the solver's tie-breaking reproducible.
        return cls(
            tuple(sorted(TrapIndex(*s) for s in sources)),
            tuple(sorted(TrapIndex(*t) for t in targets)),
        )

    @classmethod
    def from_state(cls, state: ArrayState) -> "AssignmentProblem":
        return cls.build(state.configuration().positions, target_region(state.spec))

    def cost_matrix(self) -> np.ndarray:
        """[target, source] Manhattan distances."""
        s = np.asarray(self.sources, dtype=np.int64).reshape(-1, 2)
        t = np.asarray(self.targets, dtype=np.int64).reshape(-1, 2)
        return np.abs(t[:, None, :] - s[None, :, :]).sum(axis=-1)


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[TrapIndex, TrapIndex], ...]  # (target, source)
    unfilled: tuple[TrapIndex, ...] = ()

    @property
    def cost(self) -> int:
        return sum(manhattan(t, s) for t, s in self.pairs)

    @property
    def moves(self) -> list[tuple[TrapIndex, TrapIndex]]:
        """(source, target) for every matched atom that has to move."""
        return [(s, t) for t, s in self.pairs if s != t]


def solve_mwpm(problem: AssignmentProblem) -> Matching:
    """
    Exact minimum total Manhattan distance assignment of sources to targets.

    With fewer sources than targets every source is matched and the remaining targets
    are reported as unfilled.
    """
    if not problem.sources or not problem.targets:
        return Matching((), unfilled=problem.targets)
    if len(problem.sources) < len(problem.targets):
        logger.debug(
            "Assignment has %d sources for %d targets; some targets stay empty",
            len(problem.sources), len(problem.targets),
        )
    target_idx, source_idx = linear_sum_assignment(problem.cost_matrix())
    pairs = tuple(
        (problem.targets[t], problem.sources[s]) for t, s in zip(target_idx, source_idx)
    )
    matched = {t for t, _ in pairs}
    unfilled = tuple(t for t in problem.targets if t not in matched)
    return Matching(pairs, unfilled=unfilled)


def l_path(src: TrapIndex, dst: TrapIndex, vertical_first: bool = True) -> list[TrapIndex]:
    """Traps visited after `src` along an L-shaped shortest path, ending at `dst`."""
    path = []
    col, row = src
    legs = ("y", "x") if vertical_first else ("x", "y")
    for leg in legs:
        if leg == "y":
            step = 1 if dst.row > row else -1
            while row != dst.row:
                row += step
                path.append(TrapIndex(col, row))
        else:
            step = 1 if dst.col > col else -1
            while col != dst.col:
                col += step
                path.append(TrapIndex(col, row))
    return path


def _edi_batches(src: TrapIndex, path: list[TrapIndex]) -> list[Batch]:
    batches = [Batch.extract([src])]
    here = src
    for nxt in path:
        if nxt.col != here.col:
            batches.append(Batch.step(Axis.X, nxt.col - here.col, [here]))
        else:
            batches.append(Batch.step(Axis.Y, nxt.row - here.row, [here]))
        here = nxt
    batches.append(Batch.implant([here]))
    return batches


@dataclass
class RoutingReport:
    """
    Routing outcome. Every moved atom is extracted and implanted exactly once.
    `detours` counts atoms that took a longer obstacle-free path and
    `detour_displacements` the steps they added beyond the Manhattan distance;
    `crossings` counts atoms moved over occupied static traps because no free path
    existed.
    """

    sequence: ActuationSequence = field(default_factory=ActuationSequence)
    alternate_paths: int = 0
    detours: int = 0
    detour_displacements: int = 0
    crossings: int = 0
    passes: int = 0


def _blocked(occupied: np.ndarray, path: list[TrapIndex]) -> bool:
    return any(occupied[p.row, p.col] for p in path)


def free_path(
    occupied: np.ndarray, src: TrapIndex, dst: TrapIndex, shortest_only: bool = False
) -> Optional[list[TrapIndex]]:
    """
    Breadth-first search for a path from `src` to `dst` through unoccupied traps.

    With `shortest_only` the search only takes steps that reduce the Manhattan
    distance to `dst`, so a path found has exactly that length.

    Returns:
        Traps visited after `src`, ending at `dst`, or None.
    """
    height, width = occupied.shape
    parent = {src: None}
    queue = deque([src])
    while queue:
        here = queue.popleft()
        if here == dst:
            path = []
            while here != src:
                path.append(here)
                here = parent[here]
            return path[::-1]
        for dc, dr in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            nxt = TrapIndex(here.col + dc, here.row + dr)
            if not (0 <= nxt.col < width and 0 <= nxt.row < height):
                continue
            if nxt in parent or occupied[nxt.row, nxt.col]:
                continue
            if shortest_only and manhattan(nxt, dst) >= manhattan(here, dst):
                continue
            parent[nxt] = here
            queue.append(nxt)
    return None


def route_matching(matching: Matching, state: ArrayState) -> RoutingReport:
    """
    Sequences one EDI cycle per moved atom so that, wherever possible, no dynamic trap
    passes over an occupied static trap.

    A move waits while its destination is occupied by an atom that still has to leave.
    Otherwise it takes the vertical-first L path, the horizontal-first L path or any
    other obstacle-free shortest path, in that order, and is deferred to a later pass
    when all are blocked. A pass that routes nothing takes the first pending move with
    a free destination along the shortest obstacle-free detour, or across the
    obstructing atoms along its vertical-first L when none exists.
    """
    report = RoutingReport()
    state = state.copy()
    pending = sorted(matching.moves, key=lambda m: (m[1], m[0]))

    def execute(src: TrapIndex, path: list[TrapIndex]) -> None:
        for batch in _edi_batches(src, path):
            report.sequence.append(batch)
            apply_batch(state, batch, in_place=True)

    while pending:
        report.passes += 1
        remaining = []
        for src, dst in pending:
            occupied = state.static_ids != EMPTY
            if occupied[dst.row, dst.col]:
                remaining.append((src, dst))
                continue
            path = l_path(src, dst, vertical_first=True)
            if _blocked(occupied, path):
                path = l_path(src, dst, vertical_first=False)
                if _blocked(occupied, path):
                    path = free_path(occupied, src, dst, shortest_only=True)
                if path is None:
                    remaining.append((src, dst))
                    continue
                report.alternate_paths += 1
            execute(src, path)
        progressed = len(remaining) < len(pending)
        pending = remaining
        if progressed or not pending:
            continue

        occupied = state.static_ids != EMPTY
        choice = next(
            ((src, dst) for src, dst in pending if not occupied[dst.row, dst.col]), None
        )
        if choice is None:
            # The occupants of all pending destinations would have to move in a cycle,
            # which a minimum-cost matching never contains.
            raise ContractError("Routing deadlock: all pending destinations are occupied")
        src, dst = choice
        path = free_path(occupied, src, dst)
        if path is None:
            path = l_path(src, dst, vertical_first=True)
            report.crossings += 1
        else:
            report.detours += 1
            report.detour_displacements += len(path) - manhattan(src, dst)
        execute(src, path)
        pending.remove(choice)
    return report


def mwpm_plan(state: ArrayState) -> tuple[Matching, RoutingReport]:
    matching = solve_mwpm(AssignmentProblem.from_state(state))
    return matching, route_matching(matching, state)


def mwpm_cycle(state: ArrayState, spec: Optional[GridSpec] = None) -> ActuationSequence:
    """Planner entry point for the protocol loop."""
    _, report = mwpm_plan(state)
    return report.sequence
