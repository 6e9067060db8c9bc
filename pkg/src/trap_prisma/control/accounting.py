from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class OpCounts:
    """
    Operation tallies. `transfers` counts extractions plus implantations; per-atom
    tallies are keyed by the atom id assigned at loading.
    """

    transfers: int = 0
    displacements: int = 0
    batches_transfer: int = 0
    batches_displacement: int = 0
    annihilations: int = 0
    per_atom_transfers: Counter = field(default_factory=Counter)
    per_atom_displacements: Counter = field(default_factory=Counter)

    def __iadd__(self, other: "OpCounts") -> "OpCounts":
        self.transfers += other.transfers
        self.displacements += other.displacements
        self.batches_transfer += other.batches_transfer
        self.batches_displacement += other.batches_displacement
        self.annihilations += other.annihilations
        self.per_atom_transfers.update(other.per_atom_transfers)
        self.per_atom_displacements.update(other.per_atom_displacements)
        return self

    def __add__(self, other: "OpCounts") -> "OpCounts":
        total = OpCounts()
        total += self
        total += other
        return total

    @property
    def batches(self) -> int:
        return self.batches_transfer + self.batches_displacement

    @property
    def moved_atoms(self) -> int:
        return len(self.per_atom_transfers)

    def control_time(self, params) -> float:
        return self.batches_transfer * params.t_alpha + self.batches_displacement * params.t_nu

    def totals(self) -> dict:
        return {
            "transfers": self.transfers,
            "displacements": self.displacements,
            "batches_transfer": self.batches_transfer,
            "batches_displacement": self.batches_displacement,
            "annihilations": self.annihilations,
        }


def count_ops(sequence, initial_state: Optional["ArrayState"] = None) -> OpCounts:
    """
    Totals over the batches of `sequence`.

    Per-atom tallies need atom identities, so they are only filled when the state the
    sequence starts from is given; the sequence is then replayed on a copy.
    """
    from trap_prisma.control.operations import BatchKind, apply_sequence

    if initial_state is not None:
        _, counts = apply_sequence(initial_state, sequence)
        return counts

    counts = OpCounts()
    for batch in sequence:
        if batch.kind == BatchKind.TRANSFER:
            counts.transfers += len(batch.ops)
            counts.batches_transfer += 1
        else:
            counts.displacements += len(batch.ops)
            counts.batches_displacement += 1
    return counts
