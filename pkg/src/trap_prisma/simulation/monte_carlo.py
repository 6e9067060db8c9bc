"""
Monte Carlo over independent trials, optionally across worker processes.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from tqdm.auto import tqdm

from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.control.trace import TraceWriter
from trap_prisma.lattice.grid import GridSpec
from trap_prisma.simulation.protocol import TrialRecord, check_threshold, run_trial
from trap_prisma.simulation.rng import derive_trial_seed, trial_rng

logger = logging.getLogger(__name__)


class SimulationCallback(ABC):
    @abstractmethod
    def on_trial_end(self, record: TrialRecord):
        pass

    @abstractmethod
    def on_run_end(self, records: list[TrialRecord], summary: "MonteCarloSummary"):
        pass


def binomial_stderr(p: float, n: int) -> float:
    if n <= 0:
        return math.nan
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass(frozen=True)
class MonteCarloSummary:
    trials: int
    successes: int
    stalled: int
    mean_success: float
    stderr: float
    mean_cycles: float
    mean_initial_atoms: float
    mean_time_total: float

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "MonteCarloSummary":
        n = len(records)
        successes = sum(r.success for r in records)
        p = successes / n if n else math.nan
        return cls(
            trials=n,
            successes=successes,
            stalled=sum(r.stalled for r in records),
            mean_success=p,
            stderr=binomial_stderr(p, n),
            mean_cycles=float(np.mean([r.cycles for r in records])) if n else math.nan,
            mean_initial_atoms=float(np.mean([r.initial_atoms for r in records])) if n else math.nan,
            mean_time_total=float(np.mean([r.time_total for r in records])) if n else math.nan,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _run_trials(
    spec: GridSpec,
    params: LossConfig,
    planner: str,
    seed: int,
    indices: Sequence[int],
    threshold: Optional[int],
    sampling: str,
    trace_dir: Optional[str],
    trace_trials: int,
) -> list[TrialRecord]:
    records = []
    for trial in indices:
        kwargs = dict(
            threshold=threshold,
            sampling=sampling,
            trial=trial,
            seed=derive_trial_seed(seed, trial),
        )
        rng = trial_rng(seed, trial)
        if trace_dir is not None and trial < trace_trials:
            with TraceWriter(Path(trace_dir) / f"trial_{trial:05d}.jsonl") as trace:
                records.append(run_trial(spec, params, planner, rng, trace=trace, **kwargs))
        else:
            records.append(run_trial(spec, params, planner, rng, **kwargs))
    return records


def _chunks(n: int, size: int) -> Iterable[range]:
    for start in range(0, n, size):
        yield range(start, min(start + size, n))


def run_monte_carlo(
    spec: GridSpec,
    params: LossConfig,
    planner: str = "redrec",
    trials: int = 1000,
    seed: int = 0,
    threshold: Optional[int] = None,
    sampling: str = "corruption",
    jobs: int = 1,
    callbacks: Sequence[SimulationCallback] = (),
    trace_dir=None,
    trace_trials: int = 0,
    progress: bool = True,
) -> tuple[list[TrialRecord], MonteCarloSummary]:
    """
    Runs `trials` independent trials. Trial i draws from the stream derived from
    (seed, i), so results are identical for any number of `jobs`; records come back
    ordered by trial index.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1. Got {trials}")
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1. Got {jobs}")
    check_threshold(spec, params, threshold)
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
        trace_dir = str(trace_dir)

    logger.info(
        "Running %d trials on a %dx%d grid (%dx%d target) with planner '%s'",
        trials, spec.width, spec.height, spec.target_width, spec.target_height, planner,
    )
    common = (spec, params, planner, seed)
    options = (threshold, sampling, trace_dir, trace_trials)
    records: list[Optional[TrialRecord]] = [None] * trials

    def collect(batch: list[TrialRecord], bar) -> None:
        for record in batch:
            records[record.trial] = record
            for callback in callbacks:
                callback.on_trial_end(record)
        bar.update(len(batch))

    with tqdm(total=trials, disable=not progress, desc=f"{planner} trials") as bar:
        if jobs == 1:
            for indices in _chunks(trials, 1):
                collect(_run_trials(*common, indices, *options), bar)
        else:
            chunk = max(1, math.ceil(trials / (jobs * 8)))
            with ProcessPoolExecutor(max_workers=jobs) as executor:
                futures = [
                    executor.submit(_run_trials, *common, indices, *options)
                    for indices in _chunks(trials, chunk)
                ]
                for future in as_completed(futures):
                    collect(future.result(), bar)

    summary = MonteCarloSummary.from_records(records)
    for callback in callbacks:
        callback.on_run_end(records, summary)
    logger.info(
        "Mean success %.4f +/- %.4f over %d trials", summary.mean_success, summary.stderr, trials
    )
    return records, summary


def survival_scan(
    spec: GridSpec,
    params: LossConfig,
    survivals: Sequence[float],
    **kwargs,
) -> list[tuple[float, MonteCarloSummary]]:
    """Mean success for each value of p_alpha = p_nu, all else fixed."""
    results = []
    for p in survivals:
        _, summary = run_monte_carlo(spec, params.with_survival(p), **kwargs)
        tqdm.write(f"p = {p:.4f} | success {summary.mean_success:.4f} +/- {summary.stderr:.4f}")
        results.append((p, summary))
    return results
