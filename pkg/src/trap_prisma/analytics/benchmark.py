"""
Red-rec against the assignment baseline on lossless instances holding exactly as many
atoms as target traps.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from trap_prisma.control.accounting import count_ops
from trap_prisma.control.operations import apply_sequence
from trap_prisma.lattice.array_state import ArrayState
from trap_prisma.lattice.grid import GridSpec
from trap_prisma.simulation.loss import sample_exact_loading
from trap_prisma.simulation.rng import stream_rng
from trap_prisma.solvers.mwpm import mwpm_plan
from trap_prisma.solvers.redrec import redrec_plan

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceComparison:
    redrec_transfers: int
    redrec_displacements: int
    mwpm_transfers: int
    mwpm_displacements: int
    redrec_filled: bool
    mwpm_detours: int
    mwpm_detour_displacements: int
    mwpm_crossings: int
    redrec_per_atom_transfers: tuple[int, ...]
    redrec_per_atom_displacements: tuple[int, ...]
    mwpm_per_atom_transfers: tuple[int, ...]
    mwpm_per_atom_displacements: tuple[int, ...]

    @property
    def mwpm_optimal_displacements(self) -> int:
        """Routed displacements without detour steps: the matching cost."""
        return self.mwpm_displacements - self.mwpm_detour_displacements

    @property
    def displacement_ratio(self) -> float:
        optimal = self.mwpm_optimal_displacements
        return self.redrec_displacements / optimal if optimal else np.nan

    @property
    def transfer_ratio(self) -> float:
        return self.redrec_transfers / self.mwpm_transfers if self.mwpm_transfers else np.nan


def compare_instance(state: ArrayState) -> InstanceComparison:
    redrec = redrec_plan(state)
    redrec_counts = count_ops(redrec.sequence, state)
    final, _ = apply_sequence(state, redrec.sequence)

    _, routing = mwpm_plan(state)
    mwpm_counts = count_ops(routing.sequence, state)
    return InstanceComparison(
        redrec_transfers=redrec_counts.transfers,
        redrec_displacements=redrec_counts.displacements,
        mwpm_transfers=mwpm_counts.transfers,
        mwpm_displacements=mwpm_counts.displacements,
        redrec_filled=final.contains_target(),
        mwpm_detours=routing.detours,
        mwpm_detour_displacements=routing.detour_displacements,
        mwpm_crossings=routing.crossings,
        redrec_per_atom_transfers=tuple(redrec_counts.per_atom_transfers.values()),
        redrec_per_atom_displacements=tuple(redrec_counts.per_atom_displacements.values()),
        mwpm_per_atom_transfers=tuple(mwpm_counts.per_atom_transfers.values()),
        mwpm_per_atom_displacements=tuple(mwpm_counts.per_atom_displacements.values()),
    )


def _mean_and_sigma(values: Sequence[float]) -> tuple[float, float]:
    values = np.asarray([v for v in values if not np.isnan(v)], dtype=float)
    if values.size == 0:
        return np.nan, np.nan
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


@dataclass
class BenchmarkResult:
    spec: GridSpec
    instances: list[InstanceComparison] = field(default_factory=list)

    @property
    def displacement_ratio(self) -> tuple[float, float]:
        return _mean_and_sigma([c.displacement_ratio for c in self.instances])

    @property
    def transfer_ratio(self) -> tuple[float, float]:
        return _mean_and_sigma([c.transfer_ratio for c in self.instances])

    @property
    def fill_rate(self) -> float:
        return float(np.mean([c.redrec_filled for c in self.instances])) if self.instances else np.nan

    def per_atom_histogram(self, planner: str, kind: str) -> Counter:
        """Distribution of per-atom `kind` ("transfers" or "displacements") over moved atoms."""
        attribute = f"{planner}_per_atom_{kind}"
        histogram = Counter()
        for comparison in self.instances:
            histogram.update(getattr(comparison, attribute))
        return histogram

    def summary(self) -> dict:
        displacement, displacement_sigma = self.displacement_ratio
        transfer, transfer_sigma = self.transfer_ratio
        return {
            "n_target": self.spec.n_target,
            "n_traps": self.spec.n_traps,
            "samples": len(self.instances),
            "displacement_ratio": displacement,
            "displacement_ratio_sigma": displacement_sigma,
            "transfer_ratio": transfer,
            "transfer_ratio_sigma": transfer_sigma,
            "redrec_fill_rate": self.fill_rate,
            "mwpm_detours": sum(c.mwpm_detours for c in self.instances),
            "mwpm_crossings": sum(c.mwpm_crossings for c in self.instances),
        }

    def instances_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                "n_target": self.spec.n_target,
                "instance": i,
                "displacement_ratio": c.displacement_ratio,
                "transfer_ratio": c.transfer_ratio,
                "redrec_displacements": c.redrec_displacements,
                "mwpm_displacements": c.mwpm_displacements,
                "redrec_transfers": c.redrec_transfers,
                "mwpm_transfers": c.mwpm_transfers,
            }
            for i, c in enumerate(self.instances)
        ])


def benchmark_geometry(side: int, eta: float) -> GridSpec:
    """A side x side target in an array `side` traps wide and round(eta * side) tall."""
    return GridSpec.square_target(side, max(side, int(round(eta * side))))


def run_benchmark(
    sides: Sequence[int],
    eta: float = 2.0,
    samples: int = 200,
    seed: int = 0,
    progress: bool = True,
) -> list[BenchmarkResult]:
    """
    For each target side, compares both planners on `samples` instances with exactly
    as many atoms as target traps placed uniformly at random.
    """
    results = []
    for side in sides:
        spec = benchmark_geometry(side, eta)
        result = BenchmarkResult(spec)
        for i in tqdm(range(samples), disable=not progress, desc=f"benchmark {side}x{side}"):
            state = sample_exact_loading(spec, spec.n_target, stream_rng(seed, side, i))
            result.instances.append(compare_instance(state))
        if result.fill_rate < 1.0:
            logger.warning(
                "Red-rec left the %dx%d target unfilled on %.1f%% of instances",
                side, side, 100 * (1 - result.fill_rate),
            )
        displacement, sigma = result.displacement_ratio
        tqdm.write(f"{side}x{side} | displacement ratio {displacement:.4f} +/- {sigma:.4f}")
        results.append(result)
    return results
