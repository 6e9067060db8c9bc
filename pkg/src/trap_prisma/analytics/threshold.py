"""
Configuration rejection: discard loads with fewer than N* atoms and re-image, and
estimate the mean wait between successful preparations for each N*.

For a threshold N*, with p_load the probability that a load holds at least N* atoms
and p_succ the success rate of the recorded trials that meet it, the mean wait is

    (t_MOT + t_image / p_load + protocol time) / p_succ

where protocol time is the mean imaging and control time after the accepted load.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from trap_prisma.analytics.baseline import baseline_success
from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.lattice.grid import GridSpec
from trap_prisma.simulation.protocol import TrialRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WaitTimePoint:
    threshold: int
    trials: int
    load_probability: float
    rejection_fraction: float
    success_probability: float   # among accepted loads
    overall_success: float       # among all loads
    measurements: float          # mean images between successes
    wait_time: float
    wait_mot: float
    wait_imaging: float
    wait_control: float


@dataclass
class WaitTimeCurve:
    reference: WaitTimePoint          # no rejection
    points: list[WaitTimePoint]
    optimum: Optional[WaitTimePoint]
    excluded: tuple[int, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(p) for p in [self.reference] + self.points])


def raw_wait_time(records: Sequence[TrialRecord]) -> float:
    """Total elapsed model time divided by the number of successes."""
    successes = sum(r.success for r in records)
    if not successes:
        return math.inf
    return sum(r.time_total for r in records) / successes


def wait_time_at(
    records: Sequence[TrialRecord],
    spec: GridSpec,
    params: LossConfig,
    threshold: int,
) -> Optional[WaitTimePoint]:
    """The wait-time estimate for one threshold; None if no recorded trial meets it."""
    accepted = [r for r in records if r.initial_atoms >= threshold]
    if not accepted:
        return None

    p_load = baseline_success(spec.n_traps, params.epsilon, threshold)
    p_succ = sum(r.success for r in accepted) / len(accepted)
    imaging = float(np.mean([r.protocol_images for r in accepted])) * params.t_image
    control = float(np.mean([r.time_control for r in accepted]))

    if p_succ == 0 or p_load == 0:
        wait_mot = wait_imaging = wait_control = math.inf
        measurements = math.inf
    else:
        wait_mot = params.t_mot / p_succ
        wait_imaging = (params.t_image / p_load + imaging) / p_succ
        wait_control = control / p_succ
        measurements = (1.0 / p_load + float(np.mean([r.protocol_images for r in accepted]))) / p_succ

    overall = sum(r.success for r in accepted) / len(records)
    return WaitTimePoint(
        threshold=threshold,
        trials=len(accepted),
        load_probability=p_load,
        rejection_fraction=1.0 - p_load,
        success_probability=p_succ,
        overall_success=overall,
        measurements=measurements,
        wait_time=wait_mot + wait_imaging + wait_control,
        wait_mot=wait_mot,
        wait_imaging=wait_imaging,
        wait_control=wait_control,
    )


def threshold_optimizer(
    records: Sequence[TrialRecord],
    spec: GridSpec,
    params: LossConfig,
    thresholds: Optional[Sequence[int]] = None,
) -> WaitTimeCurve:
    """
    Wait-time curve over `thresholds` (default: every integer from the target size to
    the largest recorded initial atom count) and its minimum; ties go to the smaller
    threshold. Records must come from runs without rejection.
    """
    if not records:
        raise ValueError("threshold_optimizer needs at least one trial record")
    if any(r.rejected_loads for r in records):
        logger.warning("Records include rejected loads; the estimate assumes runs without rejection")
    if thresholds is None:
        thresholds = range(spec.n_target, max(r.initial_atoms for r in records) + 1)

    reference = wait_time_at(records, spec, params, 0)
    points, excluded = [], []
    for threshold in thresholds:
        point = wait_time_at(records, spec, params, threshold)
        if point is None:
            excluded.append(threshold)
            continue
        points.append(point)
    if excluded:
        logger.warning(
            "No recorded trial reaches thresholds %d..%d; they are excluded", min(excluded), max(excluded)
        )

    finite = [p for p in points if math.isfinite(p.wait_time)]
    optimum = min(finite, key=lambda p: (p.wait_time, p.threshold)) if finite else None
    if optimum is not None:
        logger.info(
            "Optimal threshold %d: wait %.4f s (%.4f s without rejection)",
            optimum.threshold, optimum.wait_time, reference.wait_time,
        )
    return WaitTimeCurve(reference, points, optimum, tuple(excluded))
