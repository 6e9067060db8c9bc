"""
Success-probability surfaces over (target size, trap count) and the overhead factor
at which they cross a success level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import linregress
from tqdm.auto import tqdm

from trap_prisma.analytics.baseline import baseline_success
from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.lattice.grid import GridSpec
from trap_prisma.simulation.monte_carlo import run_monte_carlo

logger = logging.getLogger(__name__)


@dataclass
class SweepResult:
    """
    Mean success per (target size, trap count); `success[i, j]` belongs to
    `targets[i]` and `traps[j]`. Infeasible points are NaN.
    """

    targets: tuple[int, ...]
    traps: tuple[int, ...]
    success: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, n_target in enumerate(self.targets):
            for j, n_traps in enumerate(self.traps):
                if np.isnan(self.success[i, j]):
                    continue
                rows.append({
                    "n_target": n_target,
                    "n_traps": n_traps,
                    "eta": n_traps / n_target,
                    "success": float(self.success[i, j]),
                    "stderr": float(self.stderr[i, j]),
                })
        return pd.DataFrame(rows, columns=["n_target", "n_traps", "eta", "success", "stderr"])


def sweep_geometry(n_target: int, n_traps: int, geometry: str = "chain") -> Optional[GridSpec]:
    """
    Grid for one sweep point, or None when it cannot be built. Square targets need a
    perfect-square size and a trap count that is a whole number of rows.
    """
    if n_traps < n_target or n_target < 1:
        return None
    if geometry == "chain":
        return GridSpec.chain(n_traps, n_target)
    if geometry == "square":
        side = math.isqrt(n_target)
        if side * side != n_target or n_traps % side:
            return None
        return GridSpec.square_target(side, n_traps // side)
    raise ValueError(f"geometry must be 'chain' or 'square'. Got '{geometry}'")


def baseline_surface(targets: Sequence[int], traps: Sequence[int], epsilon: float) -> SweepResult:
    success = np.full((len(targets), len(traps)), np.nan)
    for i, n_target in enumerate(targets):
        for j, n_traps in enumerate(traps):
            if n_traps >= n_target:
                success[i, j] = baseline_success(n_traps, epsilon, n_target)
    return SweepResult(
        tuple(targets), tuple(traps), success, np.zeros_like(success),
        metadata={"epsilon": epsilon},
    )


def success_sweep(
    targets: Sequence[int],
    traps: Sequence[int],
    params: LossConfig,
    planner: str = "redrec",
    trials: int = 1000,
    seed: int = 0,
    geometry: str = "chain",
    **kwargs,
) -> SweepResult:
    """Monte Carlo mean success at every feasible point of the grid."""
    success = np.full((len(targets), len(traps)), np.nan)
    stderr = np.full_like(success, np.nan)
    points = [
        (i, j, sweep_geometry(n_target, n_traps, geometry))
        for i, n_target in enumerate(targets)
        for j, n_traps in enumerate(traps)
    ]
    skipped = sum(spec is None for _, _, spec in points)
    if skipped:
        logger.warning("Skipping %d sweep points that have no %s geometry", skipped, geometry)

    for i, j, spec in tqdm([p for p in points if p[2] is not None], desc="sweep"):
        _, summary = run_monte_carlo(
            spec, params, planner=planner, trials=trials, seed=seed, progress=False, **kwargs
        )
        success[i, j] = summary.mean_success
        stderr[i, j] = summary.stderr
        tqdm.write(
            f"N_target {targets[i]} | N_traps {traps[j]} | success {summary.mean_success:.4f}"
        )
    return SweepResult(
        tuple(targets), tuple(traps), success, stderr,
        metadata={
            "loss": params.to_dict(),
            "planner": planner,
            "trials": trials,
            "seed": seed,
            "geometry": geometry,
        },
    )


@dataclass(frozen=True)
class LinearFit:
    regressor: str
    intercept: float
    slope: float
    intercept_stderr: float
    slope_stderr: float

    def to_dict(self) -> dict:
        return {
            "regressor": self.regressor,
            "intercept": self.intercept,
            "slope": self.slope,
            "intercept_stderr": self.intercept_stderr,
            "slope_stderr": self.slope_stderr,
        }


def _fit(x: np.ndarray, y: np.ndarray, regressor: str) -> Optional[LinearFit]:
    if len(x) < 2 or np.unique(x).size < 2:
        return None
    result = linregress(x, y)
    return LinearFit(
        regressor,
        float(result.intercept),
        float(result.slope),
        float(result.intercept_stderr),
        float(result.stderr),
    )


@dataclass
class TransitionCurve:
    """Overhead factor at the crossing, per target size, with two linear fits of it."""

    level: float
    targets: tuple[int, ...]
    crossings: tuple[float, ...]     # trap counts
    etas: tuple[float, ...]
    excluded: tuple[int, ...] = ()
    fit_linear: Optional[LinearFit] = None    # eta against target size
    fit_sqrt: Optional[LinearFit] = None      # eta against sqrt(target size)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "n_target": self.targets,
            "n_traps": self.crossings,
            "eta": self.etas,
        })


def crossing(traps: Sequence[int], success: Sequence[float], level: float = 0.5) -> Optional[float]:
    """
    First trap count at which the success curve reaches `level`, interpolated
    linearly between the bracketing points. None when the curve never brackets it.
    """
    points = [(t, p) for t, p in zip(traps, success) if not np.isnan(p)]
    for (t0, p0), (t1, p1) in zip(points, points[1:]):
        if p0 < level <= p1:
            return t0 + (level - p0) * (t1 - t0) / (p1 - p0)
    return None


def transition_curve(sweep: SweepResult, level: float = 0.5) -> TransitionCurve:
    targets, crossings, excluded = [], [], []
    for i, n_target in enumerate(sweep.targets):
        n_star = crossing(sweep.traps, sweep.success[i], level)
        if n_star is None:
            excluded.append(n_target)
            continue
        targets.append(n_target)
        crossings.append(float(n_star))
    if excluded:
        logger.warning("Sizes %s do not bracket success level %.2f; excluded from the fit", excluded, level)

    sizes = np.asarray(targets, dtype=float)
    etas = np.asarray(crossings, dtype=float) / sizes if targets else np.array([])
    return TransitionCurve(
        level=level,
        targets=tuple(targets),
        crossings=tuple(crossings),
        etas=tuple(float(e) for e in etas),
        excluded=tuple(excluded),
        fit_linear=_fit(sizes, etas, "n_target"),
        fit_sqrt=_fit(np.sqrt(sizes), etas, "sqrt_n_target"),
    )
