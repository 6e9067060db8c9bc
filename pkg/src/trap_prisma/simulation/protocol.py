"""
The measure-actuate protocol loop of a single trial.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import binom

from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.control.accounting import OpCounts
from trap_prisma.control.operations import ActuationSequence, apply_batch
from trap_prisma.control.trace import TraceWriter
from trap_prisma.lattice.array_state import ArrayState
from trap_prisma.lattice.grid import GridSpec
from trap_prisma.simulation.loss import charge_batch_loss, measure, sample_batch_loss, sample_loading

logger = logging.getLogger(__name__)

Planner = Callable[[ArrayState, GridSpec], ActuationSequence]


class StallDetector:
    """Counts consecutive cycles without progress; trips after `patience` of them."""

    def __init__(self, patience=2):
        self.patience = patience
        self.counter = 0
        self.stalled = False

    def __call__(self, progressed: bool) -> bool:
        if progressed:
            self.counter = 0
        else:
            self.counter += 1
            if self.counter >= self.patience:
                self.stalled = True
        return self.stalled


@dataclass
class TrialRecord:
    """
    Outcome of one trial. `cycles` counts planned cycles; `atom_counts[k]` is the
    number of atoms detected at the k-th measurement (index 0 is the accepted load).
    Times are model seconds.
    """

    trial: int
    seed: int
    success: bool = False
    stalled: bool = False
    cycles: int = 0
    initial_atoms: int = 0
    atom_counts: list[int] = field(default_factory=list)
    cycle_counts: list[OpCounts] = field(default_factory=list)
    images: int = 0
    rejected_loads: int = 0
    time_mot: float = 0.0
    time_imaging: float = 0.0
    time_control: float = 0.0

    @property
    def final_atoms(self) -> int:
        return self.atom_counts[-1] if self.atom_counts else 0

    @property
    def loading_images(self) -> int:
        return self.rejected_loads + 1

    @property
    def protocol_images(self) -> int:
        return self.images - self.loading_images

    @property
    def time_total(self) -> float:
        return self.time_mot + self.time_imaging + self.time_control

    def totals(self) -> OpCounts:
        total = OpCounts()
        for counts in self.cycle_counts:
            total += counts
        return total

    def to_row(self) -> dict:
        """One flat row of trials.csv."""
        totals = self.totals()
        return {
            "trial": self.trial,
            "seed": self.seed,
            "success": self.success,
            "stalled": self.stalled,
            "cycles": self.cycles,
            "initial_atoms": self.initial_atoms,
            "final_atoms": self.final_atoms,
            "images": self.images,
            "rejected_loads": self.rejected_loads,
            "transfers": totals.transfers,
            "displacements": totals.displacements,
            "time_mot": self.time_mot,
            "time_imaging": self.time_imaging,
            "time_control": self.time_control,
            "time_total": self.time_total,
        }

    def to_dict(self) -> dict:
        """Full per-cycle detail."""
        detail = self.to_row()
        detail["atom_counts"] = list(self.atom_counts)
        detail["cycle_counts"] = [counts.totals() for counts in self.cycle_counts]
        return detail

    @classmethod
    def from_dict(cls, detail: dict) -> "TrialRecord":
        """Inverse of `to_dict`; per-atom tallies are not kept."""
        return cls(
            trial=int(detail["trial"]),
            seed=int(detail["seed"]),
            success=bool(detail["success"]),
            stalled=bool(detail["stalled"]),
            cycles=int(detail["cycles"]),
            initial_atoms=int(detail["initial_atoms"]),
            atom_counts=list(detail["atom_counts"]),
            cycle_counts=[OpCounts(**counts) for counts in detail["cycle_counts"]],
            images=int(detail["images"]),
            rejected_loads=int(detail["rejected_loads"]),
            time_mot=float(detail["time_mot"]),
            time_imaging=float(detail["time_imaging"]),
            time_control=float(detail["time_control"]),
        )


def execute_sequence(
    state: ArrayState,
    sequence: ActuationSequence,
    params: LossConfig,
    rng: np.random.Generator,
    sampling: str = "corruption",
) -> OpCounts:
    """
    Runs one cycle's batches on `state` in place, charging loss before each batch's
    transition. In immediate mode lost atoms are removed as they go and later
    operations on their traps are skipped.
    """
    counts = OpCounts()
    for batch in sequence:
        if sampling == "immediate":
            sample_batch_loss(state, batch, params, rng)
            _, delta = apply_batch(state, batch, in_place=True, strict=False)
        else:
            charge_batch_loss(state, batch, params)
            _, delta = apply_batch(state, batch, in_place=True)
        counts += delta
    return counts


# Smallest load acceptance probability a rejection threshold may have.
MIN_ACCEPTANCE = 1e-9


def check_threshold(spec: GridSpec, params: LossConfig, threshold: Optional[int]) -> None:
    """Raises ValueError for a rejection threshold that no load can realistically meet."""
    if threshold is None:
        return
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative. Got {threshold}")
    if threshold > spec.n_traps:
        raise ValueError(
            f"threshold {threshold} exceeds the {spec.n_traps} traps of the array"
        )
    acceptance = float(binom.sf(threshold - 1, spec.n_traps, params.epsilon))
    if acceptance < MIN_ACCEPTANCE:
        raise ValueError(
            f"threshold {threshold} accepts a load with probability {acceptance:.3g} "
            f"(epsilon={params.epsilon}, {spec.n_traps} traps)"
        )


def _load(spec, params, rng, threshold, record):
    while True:
        state = sample_loading(spec, params, rng)
        record.images += 1
        config, state = measure(state, rng)
        if threshold is None or len(config) >= threshold:
            return config, state
        record.rejected_loads += 1


def run_trial(
    spec: GridSpec,
    params: LossConfig,
    planner: Union[str, Planner],
    rng: np.random.Generator,
    threshold: Optional[int] = None,
    sampling: str = "corruption",
    trial: int = 0,
    seed: int = 0,
    trace: Optional[TraceWriter] = None,
) -> TrialRecord:
    """
    Loads the array (re-imaging until at least `threshold` atoms are detected when a
    threshold is set), then alternates planning, actuation and measurement until the
    target is filled or fewer atoms than target traps remain.

    The MOT load is charged once per trial and every image, loading images included,
    costs t_image. A planner that makes no progress for two consecutive cycles ends
    the trial as a stalled failure.
    """
    if isinstance(planner, str):
        from trap_prisma.solvers.planner_dictionary import planner_dict

        planner = planner_dict[planner]

    check_threshold(spec, params, threshold)
    record = TrialRecord(trial=trial, seed=seed, time_mot=params.t_mot)
    config, state = _load(spec, params, rng, threshold, record)
    record.initial_atoms = len(config)
    record.atom_counts.append(len(config))
    if trace is not None:
        trace.header(config, trial=trial, seed=seed)

    stall = StallDetector(patience=2)
    while True:
        if config.contains_target():
            record.success = True
            break
        if len(config) < spec.n_target:
            break

        sequence = planner(state, spec)
        record.cycles += 1
        if trace is not None:
            trace.sequence(record.cycles, sequence)
        record.cycle_counts.append(execute_sequence(state, sequence, params, rng, sampling))
        record.time_control += sequence.duration(params)

        previous = config
        config, state = measure(state, rng)
        record.images += 1
        record.atom_counts.append(len(config))
        if trace is not None:
            trace.measurement(record.cycles, len(config))

        if stall(bool(sequence) or config != previous):
            logger.warning(
                "Trial %d stalled after %d cycles with %d atoms", trial, record.cycles, len(config)
            )
            record.stalled = True
            break

    record.time_imaging = record.images * params.t_image
    return record
