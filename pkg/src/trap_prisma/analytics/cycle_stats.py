"""
Per-cycle observables of a Monte Carlo run: cycle-count distributions and initial
atom counts split by outcome, and operation counts per cycle relative to the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from trap_prisma.simulation.protocol import TrialRecord


def empirical_cdf(values: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    if len(values) == 0:
        return np.array([]), np.array([])
    support, counts = np.unique(np.asarray(values), return_counts=True)
    return support, np.cumsum(counts) / counts.sum()


def histogram(values: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    if len(values) == 0:
        return np.array([]), np.array([])
    return np.unique(np.asarray(values), return_counts=True)


def relative_per_cycle(records: Sequence[TrialRecord], attribute: str) -> np.ndarray:
    """
    Mean of an OpCounts attribute at cycle k over the trials that ran a k-th cycle,
    divided by its mean at the first cycle.
    """
    depth = max((len(r.cycle_counts) for r in records), default=0)
    if depth == 0:
        return np.array([])
    means = np.array([
        np.mean([getattr(r.cycle_counts[k], attribute) for r in records if len(r.cycle_counts) > k])
        for k in range(depth)
    ])
    if means[0] == 0:
        return np.full(depth, np.nan)
    return means / means[0]


@dataclass
class CycleStatistics:
    cycles_success: tuple[np.ndarray, np.ndarray]
    cycles_failure: tuple[np.ndarray, np.ndarray]
    initial_success: tuple[np.ndarray, np.ndarray]
    initial_failure: tuple[np.ndarray, np.ndarray]
    first_cycle_transfers: tuple[np.ndarray, np.ndarray]
    first_cycle_displacements: tuple[np.ndarray, np.ndarray]
    relative_transfers: np.ndarray
    relative_displacements: np.ndarray
    median_cycles_success: float
    median_cycles_failure: float

    def frames(self) -> dict[str, pd.DataFrame]:
        def series(pairs: dict) -> pd.DataFrame:
            parts = [
                pd.DataFrame({"series": name, "x": x, "y": y})
                for name, (x, y) in pairs.items()
            ]
            return pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=["series", "x", "y"])

        k = np.arange(1, len(self.relative_transfers) + 1)
        return {
            "cycles_cdf": series({"success": self.cycles_success, "failure": self.cycles_failure}),
            "initial_atoms": series({"success": self.initial_success, "failure": self.initial_failure}),
            "first_cycle_ops": series({
                "transfers": self.first_cycle_transfers,
                "displacements": self.first_cycle_displacements,
            }),
            "relative_ops": series({
                "transfers": (k, self.relative_transfers),
                "displacements": (k, self.relative_displacements),
            }),
        }


def cycle_statistics(records: Sequence[TrialRecord]) -> CycleStatistics:
    if not records:
        raise ValueError("cycle_statistics needs at least one trial record")
    success = [r for r in records if r.success]
    failure = [r for r in records if not r.success]
    actuated = [r for r in records if r.cycle_counts]

    def median(group):
        return float(np.median([r.cycles for r in group])) if group else float("nan")

    return CycleStatistics(
        cycles_success=empirical_cdf([r.cycles for r in success]),
        cycles_failure=empirical_cdf([r.cycles for r in failure]),
        initial_success=histogram([r.initial_atoms for r in success]),
        initial_failure=histogram([r.initial_atoms for r in failure]),
        first_cycle_transfers=histogram([r.cycle_counts[0].transfers for r in actuated]),
        first_cycle_displacements=histogram([r.cycle_counts[0].displacements for r in actuated]),
        relative_transfers=relative_per_cycle(success, "transfers"),
        relative_displacements=relative_per_cycle(success, "displacements"),
        median_cycles_success=median(success),
        median_cycles_failure=median(failure),
    )
