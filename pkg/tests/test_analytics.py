import math

import numpy as np
import pytest

from trap_prisma.analytics.cycle_stats import cycle_statistics, empirical_cdf, relative_per_cycle
from trap_prisma.analytics.sweeps import (
    SweepResult,
    baseline_surface,
    crossing,
    success_sweep,
    sweep_geometry,
    transition_curve,
)
from trap_prisma.analytics.threshold import raw_wait_time, threshold_optimizer, wait_time_at
from trap_prisma.configs import LossConfig
from trap_prisma.control import OpCounts
from trap_prisma.lattice import GridSpec
from trap_prisma.simulation import TrialRecord, run_monte_carlo

chain = GridSpec.chain(16, 8)


def step_sweep(targets):
    """Success jumps from 0 to 1 between N and 3N traps, so the crossing sits at 2N."""
    traps = sorted({n for t in targets for n in (t, 3 * t)})
    success = np.full((len(targets), len(traps)), np.nan)
    for i, t in enumerate(targets):
        success[i, traps.index(t)] = 0.0
        success[i, traps.index(3 * t)] = 1.0
    return SweepResult(tuple(targets), tuple(traps), success, np.zeros_like(success))


def test_crossing_interpolates():
    assert crossing([10, 20, 30], [0.1, 0.3, 0.7]) == pytest.approx(25.0)
    assert crossing([10, 20], [0.6, 0.9]) is None
    assert crossing([10, 20, 30], [0.0, np.nan, 1.0]) == pytest.approx(20.0)


def test_transition_of_step_sweep():
    curve = transition_curve(step_sweep([4, 8, 16]))
    assert curve.etas == pytest.approx((2.0, 2.0, 2.0))
    assert curve.fit_linear.slope == pytest.approx(0.0, abs=1e-12)
    assert curve.fit_linear.intercept == pytest.approx(2.0)
    assert curve.fit_sqrt.slope == pytest.approx(0.0, abs=1e-12)


def test_unbracketed_sizes_are_excluded():
    sweep = step_sweep([4, 8])
    sweep.success[1] = np.where(np.isnan(sweep.success[1]), np.nan, 1.0)
    curve = transition_curve(sweep)
    assert curve.excluded == (8,)
    assert curve.targets == (4,)
    assert curve.fit_linear is None


def test_lossless_transition_near_inverse_loading():
    surface = baseline_surface([20, 40, 60], list(range(20, 201)), 0.6)
    curve = transition_curve(surface)
    assert curve.excluded == ()
    for eta in curve.etas:
        assert eta == pytest.approx(1 / 0.6, abs=0.15)


def test_full_loading_surface():
    surface = baseline_surface([4, 8], [2, 4, 8], 1.0)
    assert np.isnan(surface.success[1, 0])
    assert np.nanmin(surface.success) == 1.0
    assert len(surface.to_frame()) == 3


def test_sweep_geometry():
    assert sweep_geometry(8, 16) == GridSpec.chain(16, 8)
    assert sweep_geometry(16, 48, "square") == GridSpec(4, 12, 4, 4)
    assert sweep_geometry(15, 48, "square") is None
    assert sweep_geometry(16, 8) is None


def test_success_sweep_runs():
    sweep = success_sweep([2, 4], [4, 8], LossConfig.lossless(epsilon=0.9), trials=10)
    assert sweep.success.shape == (2, 2)
    assert not np.isnan(sweep.success[0]).any()
    assert np.all((sweep.success[~np.isnan(sweep.success)] >= 0) & (sweep.success[~np.isnan(sweep.success)] <= 1))
    assert sweep.metadata["planner"] == "redrec"


def record(trial, success, cycles, initial=10, ops=()):
    return TrialRecord(
        trial=trial,
        seed=0,
        success=success,
        cycles=cycles,
        initial_atoms=initial,
        atom_counts=[initial] * (cycles + 1),
        cycle_counts=[OpCounts(transfers=t, displacements=d) for t, d in ops],
        images=cycles + 1,
        time_mot=0.1,
        time_imaging=0.02 * (cycles + 1),
    )


def test_relative_series_single_cycle():
    records = [record(i, True, 1, ops=[(4, 6)]) for i in range(5)]
    assert relative_per_cycle(records, "transfers").tolist() == [1.0]


def test_relative_series_decays():
    records = [record(0, True, 2, ops=[(10, 20), (2, 2)]), record(1, True, 1, ops=[(6, 12)])]
    assert relative_per_cycle(records, "transfers").tolist() == pytest.approx([1.0, 0.25])


def test_cycle_cdf():
    support, cdf = empirical_cdf([1, 2, 2, 3])
    assert support.tolist() == [1, 2, 3]
    assert cdf.tolist() == pytest.approx([0.25, 0.75, 1.0])


def test_cycle_statistics():
    records = [
        record(0, True, 1, initial=12, ops=[(4, 6)]),
        record(1, True, 2, initial=11, ops=[(4, 6), (2, 1)]),
        record(2, False, 0, initial=5),
    ]
    stats = cycle_statistics(records)
    assert stats.median_cycles_success == 1.5
    assert stats.median_cycles_failure == 0.0
    assert stats.first_cycle_transfers[0].tolist() == [4]
    assert set(stats.frames()) == {"cycles_cdf", "initial_atoms", "first_cycle_ops", "relative_ops"}
    with pytest.raises(ValueError):
        cycle_statistics([])


@pytest.fixture(scope="module")
def lossy_records():
    records, _ = run_monte_carlo(chain, LossConfig(), trials=60, seed=3, progress=False)
    return records


def test_reference_wait_equals_raw_wait(lossy_records):
    curve = threshold_optimizer(lossy_records, chain, LossConfig())
    assert curve.reference.threshold == 0
    assert curve.reference.rejection_fraction == 0.0
    assert curve.reference.wait_time == pytest.approx(raw_wait_time(lossy_records), rel=1e-12)


def test_threshold_curve(lossy_records):
    params = LossConfig()
    top = max(r.initial_atoms for r in lossy_records)
    curve = threshold_optimizer(lossy_records, chain, params, range(chain.n_target, top + 4))
    assert curve.points[0].threshold == chain.n_target
    assert curve.excluded == (top + 1, top + 2, top + 3)

    rejection = [p.rejection_fraction for p in curve.points]
    overall = [p.overall_success for p in curve.points]
    assert all(a <= b for a, b in zip(rejection, rejection[1:]))
    assert all(a >= b for a, b in zip(overall, overall[1:]))

    finite = [p.wait_time for p in curve.points if math.isfinite(p.wait_time)]
    assert curve.optimum.wait_time == min(finite)
    assert len(curve.to_frame()) == len(curve.points) + 1


def test_wait_time_without_qualifying_trials(lossy_records):
    assert wait_time_at(lossy_records, chain, LossConfig(), 17) is None
