"""
Plot-ready tables. Every figure file is long format with columns series, x, y, sigma.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from trap_prisma.analytics.baseline import largest_certain_target
from trap_prisma.analytics.benchmark import BenchmarkResult
from trap_prisma.analytics.cycle_stats import CycleStatistics
from trap_prisma.analytics.sweeps import SweepResult, TransitionCurve
from trap_prisma.analytics.threshold import WaitTimeCurve

COLUMNS = ["series", "x", "y", "sigma"]

FIGURES = {
    "fig2a": "displacement ratio red-rec / assignment baseline vs target size",
    "fig2b": "transfer ratio red-rec / assignment baseline vs target size",
    "fig2c": "per-atom displacement histogram, largest benchmarked size",
    "fig2d": "per-atom transfer histogram, largest benchmarked size",
    "fig3a": "lossless success probability vs trap count, one series per target size",
    "fig3b": "largest target loaded with probability >= p_min vs trap count",
    "fig4a": "simulated success probability vs trap count, one series per target size",
    "fig4b": "CDF of cycle counts, successful and failed trials",
    "fig4c": "initial atom count histograms, successful and failed trials",
    "fig4d": "overhead factor at 50% success vs target size, with linear fits",
    "fig5a": "success probability vs operation survival probability",
    "fig5b": "first-cycle operation count histograms",
    "fig5c": "per-cycle operations relative to the first cycle",
    "fig6a": "success probability vs rejection threshold (accepted and all loads)",
    "fig6b": "fraction of rejected loads vs threshold",
    "fig6c": "images between successes vs threshold",
    "fig6d": "wait time components vs threshold",
    "fig6e": "total wait time vs threshold",
}


def figure_frame(series: str, x: Iterable, y: Iterable, sigma: Optional[Iterable] = None) -> pd.DataFrame:
    x = list(x)
    y = list(y)
    sigma = [0.0] * len(x) if sigma is None else list(sigma)
    return pd.DataFrame({"series": series, "x": x, "y": y, "sigma": sigma}, columns=COLUMNS)


def _concat(frames: Sequence[pd.DataFrame]) -> pd.DataFrame:
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=COLUMNS)
    return pd.concat(frames, ignore_index=True)


def _histogram_frame(series: str, histogram: Mapping[int, int]) -> pd.DataFrame:
    keys = sorted(histogram)
    return figure_frame(series, keys, [histogram[k] for k in keys])


def benchmark_figures(results: Sequence[BenchmarkResult]) -> dict[str, pd.DataFrame]:
    sizes = [r.spec.n_target for r in results]
    displacement = [r.displacement_ratio for r in results]
    transfer = [r.transfer_ratio for r in results]
    figures = {
        "fig2a": figure_frame("redrec/mwpm", sizes, [m for m, _ in displacement], [s for _, s in displacement]),
        "fig2b": figure_frame("redrec/mwpm", sizes, [m for m, _ in transfer], [s for _, s in transfer]),
    }
    if results:
        largest = max(results, key=lambda r: r.spec.n_target)
        for name, kind in (("fig2c", "displacements"), ("fig2d", "transfers")):
            figures[name] = _concat([
                _histogram_frame(planner, largest.per_atom_histogram(planner, kind))
                for planner in ("redrec", "mwpm")
            ])
    return figures


def _surface_frame(sweep: SweepResult) -> pd.DataFrame:
    frames = []
    for i, n_target in enumerate(sweep.targets):
        row = sweep.success[i]
        keep = ~np.isnan(row)
        frames.append(figure_frame(
            f"n_target={n_target}",
            np.asarray(sweep.traps)[keep],
            row[keep],
            sweep.stderr[i][keep],
        ))
    return _concat(frames)


def baseline_figures(surface: SweepResult, p_min: float = 0.98) -> dict[str, pd.DataFrame]:
    epsilon = surface.metadata["epsilon"]
    traps = list(surface.traps)
    return {
        "fig3a": _surface_frame(surface),
        "fig3b": figure_frame(
            f"epsilon={epsilon}",
            traps,
            [largest_certain_target(n, epsilon, p_min) for n in traps],
        ),
    }


def sweep_figures(sweep: SweepResult, transition: TransitionCurve) -> dict[str, pd.DataFrame]:
    frames = [figure_frame("crossing", transition.targets, transition.etas)]
    sizes = np.asarray(transition.targets, dtype=float)
    for fit, regressor in ((transition.fit_linear, sizes), (transition.fit_sqrt, np.sqrt(sizes))):
        if fit is not None:
            frames.append(figure_frame(
                f"fit_{fit.regressor}", transition.targets, fit.intercept + fit.slope * regressor
            ))
    return {"fig4a": _surface_frame(sweep), "fig4d": _concat(frames)}


def cycle_figures(stats: CycleStatistics) -> dict[str, pd.DataFrame]:
    k = np.arange(1, len(stats.relative_transfers) + 1)
    return {
        "fig4b": _concat([
            figure_frame("success", *stats.cycles_success),
            figure_frame("failure", *stats.cycles_failure),
        ]),
        "fig4c": _concat([
            figure_frame("success", *stats.initial_success),
            figure_frame("failure", *stats.initial_failure),
        ]),
        "fig5b": _concat([
            figure_frame("transfers", *stats.first_cycle_transfers),
            figure_frame("displacements", *stats.first_cycle_displacements),
        ]),
        "fig5c": _concat([
            figure_frame("transfers", k, stats.relative_transfers),
            figure_frame("displacements", k, stats.relative_displacements),
        ]),
    }


def scan_figures(scan) -> dict[str, pd.DataFrame]:
    """`scan` is a list of (survival probability, MonteCarloSummary)."""
    return {
        "fig5a": figure_frame(
            "success",
            [p for p, _ in scan],
            [s.mean_success for _, s in scan],
            [s.stderr for _, s in scan],
        )
    }


def threshold_figures(curve: WaitTimeCurve) -> dict[str, pd.DataFrame]:
    points = curve.points
    x = [p.threshold for p in points]
    return {
        "fig6a": _concat([
            figure_frame("accepted", x, [p.success_probability for p in points]),
            figure_frame("overall", x, [p.overall_success for p in points]),
        ]),
        "fig6b": figure_frame("rejected", x, [p.rejection_fraction for p in points]),
        "fig6c": figure_frame("images", x, [p.measurements for p in points]),
        "fig6d": _concat([
            figure_frame("mot", x, [p.wait_mot for p in points]),
            figure_frame("imaging", x, [p.wait_imaging for p in points]),
            figure_frame("control", x, [p.wait_control for p in points]),
        ]),
        "fig6e": figure_frame("wait", x, [p.wait_time for p in points]),
    }


def write_figures(out_dir, figures: Mapping[str, pd.DataFrame]) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(figures):
        if name not in FIGURES:
            raise ValueError(f"Unknown figure '{name}'")
        path = out_dir / f"{name}.csv"
        figures[name].to_csv(path, index=False)
        paths.append(path)
    return paths
