"""
Exact reconfiguration of a 1D chain of traps in a single EDI cycle.

With equal numbers of atoms and targets the order-preserving assignment is the unique
displacement-minimising one. Otherwise a minimum-cost, maximum-cardinality matching is
found by dynamic programming over the sorted sources and targets (the same optimum as a
shortest-augmenting-path assignment solver, easier to check against brute force).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from trap_prisma.control.operations import ActuationSequence, Axis, Batch
from trap_prisma.lattice.grid import TrapIndex

_UNREACHABLE = np.iinfo(np.int64).max // 4


@dataclass(frozen=True)
class ChainProblem:
    length: int
    sources: tuple[int, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        for name in ("sources", "targets"):
            positions = getattr(self, name)
            if any(b <= a for a, b in zip(positions, positions[1:])):
                raise ValueError(f"{name} must be strictly increasing. Got {positions}")
            if positions and (positions[0] < 0 or positions[-1] >= self.length):
                raise ValueError(f"{name} must lie within [0, {self.length}). Got {positions}")

    @classmethod
    def build(cls, length: int, sources: Iterable[int], targets: Iterable[int]) -> "ChainProblem":
        return cls(length, tuple(sorted(sources)), tuple(sorted(targets)))


@dataclass(frozen=True)
class ChainPlan:
    """Order-preserving (source, destination) pairs plus the unmatched sources and targets."""

    assignment: tuple[tuple[int, int], ...]
    idle: tuple[int, ...] = ()
    unfilled: tuple[int, ...] = ()

    @property
    def cost(self) -> int:
        return sum(abs(dst - src) for src, dst in self.assignment)

    @property
    def moves(self) -> tuple[tuple[int, int], ...]:
        return tuple((src, dst) for src, dst in self.assignment if src != dst)


def _align(longer: tuple[int, ...], shorter: tuple[int, ...]) -> list[tuple[int, int]]:
    """
    Matches every element of `shorter` to a distinct element of `longer`, preserving
    order and minimising the summed distance. Ties keep the leftmost elements of `longer`.

    Returns:
        (index into longer, index into shorter) pairs in increasing order.
    """
    n, m = len(longer), len(shorter)
    a = np.asarray(longer, dtype=np.int64)
    b = np.asarray(shorter, dtype=np.int64)
    cost = np.abs(a[:, None] - b[None, :])

    # dp[i, j]: cheapest way to match the first j of `shorter` within the first i of `longer`.
    dp = np.full((n + 1, m + 1), _UNREACHABLE, dtype=np.int64)
    dp[:, 0] = 0
    for j in range(1, m + 1):
        dp[1:, j] = np.minimum.accumulate(dp[:-1, j - 1] + cost[:, j - 1])

    pairs = []
    i, j = n, m
    while j > 0:
        if i > j and dp[i - 1, j] == dp[i, j]:
            i -= 1
            continue
        pairs.append((i - 1, j - 1))
        i -= 1
        j -= 1
    pairs.reverse()
    return pairs


def solve_chain(problem: ChainProblem) -> ChainPlan:
    sources, targets = problem.sources, problem.targets
    if not sources or not targets:
        return ChainPlan((), idle=sources, unfilled=targets)

    if len(sources) == len(targets):
        return ChainPlan(tuple(zip(sources, targets)))

    if len(sources) > len(targets):
        pairs = _align(sources, targets)
        assignment = tuple((sources[i], targets[j]) for i, j in pairs)
        used = {i for i, _ in pairs}
        idle = tuple(s for i, s in enumerate(sources) if i not in used)
        return ChainPlan(assignment, idle=idle)

    pairs = _align(targets, sources)
    assignment = tuple((sources[j], targets[i]) for i, j in pairs)
    used = {i for i, _ in pairs}
    unfilled = tuple(t for i, t in enumerate(targets) if i not in used)
    return ChainPlan(assignment, unfilled=unfilled)


class ChainLocator(NamedTuple):
    """A column (`axis` Y, moves along rows) or a row (`axis` X) of the grid."""

    axis: Axis
    line: int

    @classmethod
    def column(cls, col: int) -> "ChainLocator":
        return cls(Axis.Y, col)

    @classmethod
    def row(cls, row: int) -> "ChainLocator":
        return cls(Axis.X, row)

    def trap(self, position: int) -> TrapIndex:
        if self.axis == Axis.Y:
            return TrapIndex(self.line, position)
        return TrapIndex(position, self.line)


def plan_to_sequence(
    plan: ChainPlan,
    chain: ChainLocator,
    pre_extracted: Iterable[int] = (),
    hold: Iterable[int] = (),
) -> ActuationSequence:
    """
    Expands a chain plan into one EDI cycle of parallel batches.

    Atoms moving toward larger indices are stepped first, then those moving toward
    smaller indices; within a direction every batch steps the atoms that still have
    distance left. Sources in `pre_extracted` already sit in dynamic traps and are only
    implanted; atoms bound for `hold` are extracted but left in their dynamic traps,
    even when they do not move.
    """
    pre_extracted = set(pre_extracted)
    hold = set(hold)
    movers = [
        (src, dst)
        for src, dst in plan.assignment
        if src != dst or src in pre_extracted or dst in hold
    ]

    sequence = ActuationSequence()
    to_extract = [src for src, dst in movers if src not in pre_extracted]
    if to_extract:
        sequence.append(Batch.extract(chain.trap(p) for p in to_extract))

    for sign in (1, -1):
        group = [(src, dst) for src, dst in movers if (dst - src) * sign > 0]
        if not group:
            continue
        longest = max(abs(dst - src) for src, dst in group)
        for k in range(longest):
            stepping = [src + sign * k for src, dst in group if abs(dst - src) > k]
            sequence.append(Batch.step(chain.axis, sign, (chain.trap(p) for p in stepping)))

    to_implant = [dst for _, dst in movers if dst not in hold]
    if to_implant:
        sequence.append(Batch.implant(chain.trap(p) for p in to_implant))
    return sequence
