import math

import numpy as np
import pytest

from trap_prisma.configs import LossConfig
from trap_prisma.control import ActuationSequence, Axis, Batch, ContractError, apply_batch
from trap_prisma.lattice import ArrayState, Configuration, GridSpec, TrapIndex
from trap_prisma.simulation import (
    StallDetector,
    charge_batch_loss,
    check_threshold,
    execute_sequence,
    measure,
    run_trial,
    sample_batch_loss,
    sample_exact_loading,
    sample_loading,
    stream_rng,
    trial_rng,
)
from trap_prisma.solvers import redrec_cycle

defaults = LossConfig()
no_idle = LossConfig(tau=math.inf)


def state_with(spec, positions):
    return ArrayState.from_configuration(Configuration.from_positions(spec, positions))


def test_loading_extremes():
    spec = GridSpec(8, 16, 8, 8)
    assert sample_loading(spec, LossConfig(epsilon=1.0), stream_rng(0)).n_atoms == 128
    assert sample_loading(spec, LossConfig(epsilon=0.0), stream_rng(0)).n_atoms == 0


def test_loading_mean_occupancy():
    spec = GridSpec(32, 64, 32, 32)
    rng = stream_rng(21)
    counts = [sample_loading(spec, defaults, rng).n_atoms for _ in range(400)]
    sigma = math.sqrt(2048 * 0.6 * 0.4 / 400)
    assert abs(np.mean(counts) - 1228.8) < 5 * sigma


def test_exact_loading_count():
    spec = GridSpec(4, 8, 4, 4)
    assert sample_exact_loading(spec, 17, stream_rng(3)).n_atoms == 17
    with pytest.raises(ValueError):
        sample_exact_loading(spec, 33, stream_rng(3))


def test_edi_cycle_corruption():
    spec = GridSpec(5, 1, 1, 1)
    state = state_with(spec, [(0, 0)])
    sequence = ActuationSequence([
        Batch.extract([(0, 0)]),
        Batch.step(Axis.X, 1, [(0, 0)]),
        Batch.step(Axis.X, 1, [(1, 0)]),
        Batch.step(Axis.X, 1, [(2, 0)]),
        Batch.implant([(3, 0)]),
    ])
    execute_sequence(state, sequence, no_idle, stream_rng(0))
    assert state.static_atom(TrapIndex(3, 0)).corruption == pytest.approx(0.985 ** 5)
    assert 0.985 ** 5 == pytest.approx(0.92726, abs=1e-5)


def test_idle_atom_during_displacement():
    spec = GridSpec(4, 2, 1, 1)
    state = state_with(spec, [(0, 0), (3, 1)])
    state, _ = apply_batch(state, Batch.extract([(0, 0)]))
    charge_batch_loss(state, Batch.step(Axis.X, 1, [(0, 0)]), defaults)
    assert state.dynamic_corruption[0, 0] == pytest.approx(0.985)
    assert state.static_corruption[1, 3] == pytest.approx(math.exp(-67e-6 / 60))
    assert state.static_corruption[1, 3] == pytest.approx(1 - 1.1167e-6, abs=1e-9)


def test_infinite_lifetime_has_no_idle_loss():
    assert no_idle.idle_survival(10.0) == 1.0
    assert LossConfig.lossless().is_lossless


def test_immediate_loss_removes_only_operated_atoms():
    spec = GridSpec(4, 2, 1, 1)
    state = state_with(spec, [(0, 0), (3, 1)])
    state, _ = apply_batch(state, Batch.extract([(0, 0)]))
    lost = sample_batch_loss(
        state, Batch.step(Axis.X, 1, [(0, 0)]), LossConfig(p_nu=0.0, tau=math.inf), stream_rng(0)
    )
    assert lost == 1
    assert state.n_dynamic == 0
    assert state.static_atom(TrapIndex(3, 1)) is not None


def test_corruption_never_increases():
    spec = GridSpec(8, 16, 8, 8)
    state = sample_exact_loading(spec, 72, stream_rng(5))
    for batch in redrec_cycle(state):
        static_before = state.static_corruption.copy()
        dynamic_before = state.dynamic_corruption.copy()
        charge_batch_loss(state, batch, defaults)
        assert np.all(state.static_corruption <= static_before)
        assert np.all(state.dynamic_corruption <= dynamic_before)
        apply_batch(state, batch, in_place=True)


def test_measure_extremes():
    spec = GridSpec(4, 4, 2, 2)
    state = ArrayState.from_occupancy(spec, np.ones((4, 4), dtype=bool))
    config, projected = measure(state, stream_rng(0))
    assert len(config) == 16
    assert np.all(projected.static_corruption == 1.0)

    state.static_corruption[:] = 0.0
    config, projected = measure(state, stream_rng(0))
    assert len(config) == 0
    assert projected.n_atoms == 0


def test_measure_half_corruption():
    spec = GridSpec(20, 20, 2, 2)
    state = ArrayState.from_occupancy(spec, np.ones((20, 20), dtype=bool))
    state.static_corruption[:] = 0.5
    rng = stream_rng(9)
    detected = [len(measure(state, rng)[0]) for _ in range(200)]
    sigma = math.sqrt(0.25 / (400 * 200))
    assert abs(np.mean(detected) / 400 - 0.5) < 5 * sigma


def test_measure_refuses_dynamic_atoms():
    spec = GridSpec(4, 4, 2, 2)
    state, _ = apply_batch(state_with(spec, [(1, 1)]), Batch.extract([(1, 1)]))
    with pytest.raises(ContractError):
        measure(state, stream_rng(0))


def test_stall_detector():
    stall = StallDetector(patience=2)
    assert not stall(False)
    assert not stall(True)
    assert not stall(False)
    assert stall(False)


def test_lossless_trial_succeeds_in_one_cycle():
    spec = GridSpec(8, 16, 8, 8)
    params = LossConfig.lossless(epsilon=0.7)
    for trial in range(10):
        record = run_trial(spec, params, "redrec", trial_rng(0, trial), trial=trial)
        if record.initial_atoms >= spec.n_target:
            assert record.success
            assert record.cycles <= 1
            assert record.final_atoms == record.initial_atoms


def test_too_few_atoms_fails_without_actuation():
    spec = GridSpec(8, 16, 8, 8)
    record = run_trial(spec, LossConfig.lossless(epsilon=0.2), "redrec", trial_rng(0, 0))
    assert not record.success
    assert record.cycles == 0
    assert record.images == 1
    assert record.time_control == 0.0
    assert record.time_total == pytest.approx(0.1 + 0.02)


def test_trial_is_deterministic():
    spec = GridSpec(8, 16, 8, 8)
    first = run_trial(spec, defaults, "redrec", trial_rng(4, 2), trial=2)
    second = run_trial(spec, defaults, "redrec", trial_rng(4, 2), trial=2)
    assert first.to_dict() == second.to_dict()


def test_threshold_rejects_small_loads():
    spec = GridSpec(8, 16, 8, 8)
    params = LossConfig.lossless(epsilon=0.45)
    for trial in range(5):
        record = run_trial(spec, params, "redrec", trial_rng(1, trial), threshold=spec.n_target)
        assert record.initial_atoms >= spec.n_target
        assert record.loading_images == record.rejected_loads + 1
        assert record.images == record.loading_images + record.cycles
        assert record.success


def test_threshold_beyond_array_is_rejected():
    spec = GridSpec(4, 8, 4, 4)
    with pytest.raises(ValueError):
        run_trial(spec, defaults, "redrec", trial_rng(0, 0), threshold=33)
    with pytest.raises(ValueError):
        run_trial(spec, defaults, "redrec", trial_rng(0, 0), threshold=-1)
    with pytest.raises(ValueError):
        run_trial(spec, LossConfig(epsilon=0.0), "redrec", trial_rng(0, 0), threshold=1)
    check_threshold(spec, defaults, spec.n_traps // 2)


def test_immediate_sampling_matches_lossless_outcome():
    spec = GridSpec(6, 12, 6, 6)
    params = LossConfig.lossless(epsilon=0.8)
    for trial in range(5):
        deferred = run_trial(spec, params, "redrec", trial_rng(2, trial))
        immediate = run_trial(spec, params, "redrec", trial_rng(2, trial), sampling="immediate")
        assert deferred.success == immediate.success
        assert deferred.initial_atoms == immediate.initial_atoms


def test_lossy_immediate_sampling_runs():
    spec = GridSpec(8, 16, 8, 8)
    params = LossConfig(epsilon=0.7, p_alpha=0.9, p_nu=0.95)
    for trial in range(5):
        record = run_trial(spec, params, "mwpm", trial_rng(3, trial), sampling="immediate")
        assert record.final_atoms <= record.initial_atoms
        assert len(record.atom_counts) == record.cycles + 1


def test_planner_without_progress_stalls():
    spec = GridSpec.chain(8, 2)
    params = LossConfig.lossless(epsilon=0.5)
    records = [
        run_trial(spec, params, lambda state, grid: ActuationSequence(), trial_rng(6, trial))
        for trial in range(40)
    ]
    stalled = [r for r in records if r.stalled]
    assert stalled
    for record in stalled:
        assert not record.success
        assert record.cycles == 2


def test_sampling_modes_agree_under_loss():
    spec = GridSpec(8, 16, 8, 8)
    params = LossConfig(epsilon=0.7, p_alpha=0.9, p_nu=0.95, tau=math.inf)
    initial = sample_exact_loading(spec, 72, stream_rng(8))
    sequence = redrec_cycle(initial)
    assert len(sequence) > 0

    charged = initial.copy()
    execute_sequence(charged, sequence, params, stream_rng(0))
    expected = float(charged.static_corruption[charged.static_occupied].sum())

    rng = stream_rng(9)
    survivors = {}
    for sampling in ("corruption", "immediate"):
        counts = []
        for _ in range(300):
            state = initial.copy()
            execute_sequence(state, sequence, params, rng, sampling)
            config, _ = measure(state, rng)
            counts.append(len(config))
        survivors[sampling] = np.asarray(counts, dtype=float)

    stderr = {k: v.std(ddof=1) / np.sqrt(v.size) for k, v in survivors.items()}
    for sampling, counts in survivors.items():
        assert abs(counts.mean() - expected) < 4 * stderr[sampling]
    difference = survivors["corruption"].mean() - survivors["immediate"].mean()
    assert abs(difference) < 4 * math.hypot(stderr["corruption"], stderr["immediate"])
