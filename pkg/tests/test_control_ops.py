import numpy as np
import pytest

from trap_prisma.control import (
    ActuationSequence,
    Axis,
    Batch,
    BatchKind,
    ContractError,
    Step,
    apply_batch,
    apply_sequence,
    count_ops,
    validate_batch,
)
from trap_prisma.lattice import ArrayState, Configuration, GridSpec, TrapIndex
from trap_prisma.simulation.loss import sample_exact_loading
from trap_prisma.simulation.rng import stream_rng
from trap_prisma.solvers import mwpm_cycle, redrec_cycle

spec = GridSpec(6, 6, 2, 2)


def state_with(positions, grid=spec):
    return ArrayState.from_configuration(Configuration.from_positions(grid, positions))


def test_extract_along_a_column_is_valid():
    state = state_with([(5, 0), (5, 1), (5, 2)])
    assert validate_batch(Batch.extract([(5, 0), (5, 1), (5, 2)]), state) is None


def test_diagonal_batch_violates_chain_constraint():
    state = state_with([(0, 0), (1, 1)])
    violation = validate_batch(Batch.extract([(0, 0), (1, 1)]), state)
    assert violation is not None
    assert violation.reason == "not a sub-row or sub-column"


def test_step_off_the_grid():
    state, _ = apply_batch(state_with([(5, 3)]), Batch.extract([(5, 3)]))
    violation = validate_batch(Batch.step(Axis.X, 1, [(5, 3)]), state)
    assert violation.reason == "destination outside grid"
    assert violation.at == TrapIndex(5, 3)


def test_trap_addressed_twice():
    state = state_with([(1, 1)])
    violation = validate_batch(Batch.extract([(1, 1), (1, 1)]), state)
    assert violation.reason == "trap addressed twice"


def test_layer_preconditions():
    state = state_with([(2, 2)])
    assert validate_batch(Batch.extract([(3, 3)]), state).reason == "no static atom to extract"
    assert validate_batch(Batch.implant([(2, 2)]), state).reason == "no dynamic atom to implant"
    assert validate_batch(Batch.step(Axis.Y, 1, [(2, 2)]), state).reason == "no dynamic atom to displace"


def test_validate_never_mutates():
    state = state_with([(0, 0), (1, 1)])
    before = (state.static_ids.copy(), state.dynamic_ids.copy())
    validate_batch(Batch.extract([(0, 0), (1, 1)]), state)
    validate_batch(Batch.extract([(0, 0)]), state)
    assert np.array_equal(state.static_ids, before[0])
    assert np.array_equal(state.dynamic_ids, before[1])


def test_batch_kind_must_match_operations():
    with pytest.raises(ValueError):
        Batch(BatchKind.TRANSFER, (Step(Axis.X, 1, TrapIndex(0, 0)),))
    with pytest.raises(ValueError):
        Batch(BatchKind.DISPLACEMENT, ())


def test_extract_moves_atom_to_dynamic_layer():
    state = state_with([(3, 2)])
    new, counts = apply_batch(state, Batch.extract([(3, 2)]))
    assert new.static_atom(TrapIndex(3, 2)) is None
    assert new.dynamic_atom(TrapIndex(3, 2)) is not None
    assert counts.transfers == 1
    # The input state is left untouched.
    assert state.static_atom(TrapIndex(3, 2)) is not None


def test_step_moves_dynamic_atom_one_unit():
    state, _ = apply_batch(state_with([(3, 2)]), Batch.extract([(3, 2)]))
    state, counts = apply_batch(state, Batch.step(Axis.Y, -1, [(3, 2)]))
    assert state.dynamic_atom(TrapIndex(3, 1)) is not None
    assert state.dynamic_atom(TrapIndex(3, 2)) is None
    assert counts.displacements == 1


def test_implant_onto_occupied_trap_annihilates_both_atoms():
    state = state_with([(3, 2), (3, 3)])
    sequence = ActuationSequence([
        Batch.extract([(3, 3)]),
        Batch.step(Axis.Y, -1, [(3, 3)]),
        Batch.implant([(3, 2)]),
    ])
    final, counts = apply_sequence(state, sequence)
    assert final.n_atoms == 0
    assert counts.annihilations == 1


def test_apply_batch_raises_contract_error():
    with pytest.raises(ContractError):
        apply_batch(state_with([(0, 0)]), Batch.extract([(4, 4)]))


def test_non_strict_apply_skips_vacant_traps():
    state = state_with([(0, 0)])
    new, counts = apply_batch(state, Batch.extract([(0, 0), (0, 1)]), strict=False)
    assert new.n_dynamic == 1
    assert counts.transfers == 1


def test_count_ops_empty_sequence():
    counts = count_ops(ActuationSequence())
    assert counts.totals() == {
        "transfers": 0,
        "displacements": 0,
        "batches_transfer": 0,
        "batches_displacement": 0,
        "annihilations": 0,
    }


def test_count_ops_single_edi_cycle():
    state = state_with([(0, 0)])
    sequence = ActuationSequence([
        Batch.extract([(0, 0)]),
        Batch.step(Axis.X, 1, [(0, 0)]),
        Batch.step(Axis.X, 1, [(1, 0)]),
        Batch.step(Axis.X, 1, [(2, 0)]),
        Batch.implant([(3, 0)]),
    ])
    counts = count_ops(sequence)
    assert (counts.transfers, counts.displacements) == (2, 3)
    assert (counts.batches_transfer, counts.batches_displacement) == (2, 3)

    replayed = count_ops(sequence, state)
    atom_id = state.static_atom(TrapIndex(0, 0)).id
    assert replayed.per_atom_transfers[atom_id] == 2
    assert replayed.per_atom_displacements[atom_id] == 3


def test_control_time():
    from trap_prisma.configs import LossConfig

    sequence = ActuationSequence([Batch.extract([(0, 0)]), Batch.step(Axis.X, 1, [(0, 0)])])
    params = LossConfig()
    assert count_ops(sequence).control_time(params) == pytest.approx(15e-6 + 67e-6)
    assert sequence.duration(params) == pytest.approx(15e-6 + 67e-6)


@pytest.mark.parametrize("planner", [redrec_cycle, mwpm_cycle])
def test_planner_outputs_conserve_atoms_and_transfer_parity(planner):
    grid = GridSpec(6, 12, 6, 6)
    for i in range(15):
        state = sample_exact_loading(grid, 36 + i % 4, stream_rng(3, i))
        sequence = planner(state, grid)
        # Every batch must apply cleanly.
        final, counts = apply_sequence(state, sequence)
        assert final.n_atoms == state.n_atoms
        assert final.n_dynamic == 0
        assert counts.annihilations == 0
        assert counts.transfers % 2 == 0
