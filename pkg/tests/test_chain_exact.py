import itertools
import random

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from trap_prisma.control import Axis, BatchKind, apply_sequence, count_ops
from trap_prisma.lattice import ArrayState, Configuration, GridSpec
from trap_prisma.solvers.chain_exact import ChainLocator, ChainPlan, ChainProblem, plan_to_sequence, solve_chain


def brute_force_cost(sources, targets):
    """Minimum summed distance over all injective maps between the smaller and larger set."""
    small, large = (sources, targets) if len(sources) <= len(targets) else (targets, sources)
    if not small:
        return 0
    return min(
        sum(abs(a - b) for a, b in zip(small, chosen))
        for chosen in itertools.permutations(large, len(small))
    )


def assignment_cost(sources, targets):
    if not sources or not targets:
        return 0
    cost = np.abs(np.subtract.outer(sources, targets))
    rows, cols = linear_sum_assignment(cost)
    return int(cost[rows, cols].sum())


def test_equal_counts():
    plan = solve_chain(ChainProblem.build(5, [0, 4], [1, 3]))
    assert plan.assignment == ((0, 1), (4, 3))
    assert plan.cost == 2


def test_surplus_atom_left_idle():
    plan = solve_chain(ChainProblem.build(5, [0, 2, 4], [2, 3]))
    assert plan.assignment == ((2, 2), (4, 3))
    assert plan.idle == (0,)
    assert plan.cost == 1


def test_deficit_leaves_targets_unfilled():
    plan = solve_chain(ChainProblem.build(6, [1], [2, 3]))
    assert len(plan.assignment) == 1
    assert len(plan.unfilled) == 1
    assert plan.cost == 1


def test_empty_problems():
    assert solve_chain(ChainProblem.build(4, [], [1, 2])).unfilled == (1, 2)
    assert solve_chain(ChainProblem.build(4, [0, 3], [])).idle == (0, 3)


def test_problem_validation():
    with pytest.raises(ValueError):
        ChainProblem(4, (2, 1), (0,))
    with pytest.raises(ValueError):
        ChainProblem(4, (0, 4), (1,))


def _check(sources, targets, oracle=brute_force_cost):
    plan = solve_chain(ChainProblem.build(max(sources + targets, default=0) + 1, sources, targets))
    assert plan.cost == oracle(sources, targets)
    pairs = plan.assignment
    assert len(pairs) == min(len(sources), len(targets))
    # Order preserving.
    assert all(a[0] < b[0] and a[1] < b[1] for a, b in zip(pairs, pairs[1:]))


def test_exhaustive_short_chains():
    for length in range(1, 6):
        positions = range(length)
        for n_src in range(length + 1):
            for n_tgt in range(length + 1):
                for sources in itertools.combinations(positions, n_src):
                    for targets in itertools.combinations(positions, n_tgt):
                        _check(list(sources), list(targets))


def test_exhaustive_chains_up_to_eight_traps():
    for length in range(6, 9):
        positions = range(length)
        subsets = [
            list(c) for k in range(length + 1) for c in itertools.combinations(positions, k)
        ]
        for sources in subsets:
            for targets in subsets:
                _check(sources, targets, oracle=assignment_cost)


def test_random_longer_chains():
    rng = random.Random(5)
    for _ in range(200):
        length = rng.randint(2, 12)
        sources = sorted(rng.sample(range(length), rng.randint(0, min(length, 7))))
        targets = sorted(rng.sample(range(length), rng.randint(0, min(length, 5))))
        _check(sources, targets)


def chain_state(length, rows):
    spec = GridSpec.chain(length, 1)
    return ArrayState.from_configuration(Configuration.from_positions(spec, [(0, r) for r in rows]))


def test_plan_to_sequence_single_cycle():
    plan = solve_chain(ChainProblem.build(5, [0, 4], [1, 3]))
    sequence = plan_to_sequence(plan, ChainLocator.column(0))
    counts = count_ops(sequence)
    assert (counts.transfers, counts.displacements) == (4, 2)
    kinds = [batch.kind for batch in sequence]
    assert kinds == [BatchKind.TRANSFER, BatchKind.DISPLACEMENT, BatchKind.DISPLACEMENT, BatchKind.TRANSFER]

    final, _ = apply_sequence(chain_state(5, [0, 4]), sequence)
    assert final.column_rows(0) == [1, 3]


def test_same_direction_moves_share_batches():
    plan = ChainPlan(((0, 2), (1, 3)))
    sequence = plan_to_sequence(plan, ChainLocator.column(0))
    steps = [batch for batch in sequence if batch.kind == BatchKind.DISPLACEMENT]
    assert len(steps) == 2
    assert [sorted(t.row for t in batch.traps) for batch in steps] == [[0, 1], [1, 2]]
    assert count_ops(sequence).displacements == 4

    final, _ = apply_sequence(chain_state(4, [0, 1]), sequence)
    assert final.column_rows(0) == [2, 3]


def test_row_chain_uses_horizontal_steps():
    plan = ChainPlan(((0, 2),))
    sequence = plan_to_sequence(plan, ChainLocator.row(1))
    assert {batch.direction for batch in sequence if batch.direction} == {(Axis.X, 1)}
    assert sequence.batches[0].traps[0] == (0, 1)


def test_hold_extracts_atom_that_does_not_move():
    plan = ChainPlan(((3, 3), (5, 4)))
    sequence = plan_to_sequence(plan, ChainLocator.column(0), hold={3})
    extracted = {t.row for t in sequence.batches[0].traps}
    implanted = {t.row for t in sequence.batches[-1].traps}
    assert extracted == {3, 5}
    assert implanted == {4}

    final, _ = apply_sequence(chain_state(8, [3, 5]), sequence)
    assert final.column_rows(0) == [4]
    assert final.dynamic_atom((0, 3)) is not None


def test_random_plans_execute_cleanly():
    rng = random.Random(9)
    for _ in range(100):
        length = rng.randint(2, 16)
        sources = sorted(rng.sample(range(length), rng.randint(1, length)))
        targets = sorted(rng.sample(range(length), rng.randint(1, len(sources))))
        plan = solve_chain(ChainProblem.build(length, sources, targets))
        sequence = plan_to_sequence(plan, ChainLocator.column(0))
        final, counts = apply_sequence(chain_state(length, sources), sequence)
        assert set(targets) <= set(final.column_rows(0))
        assert counts.displacements == plan.cost
        assert counts.annihilations == 0


def test_identity_plan_is_empty_sequence():
    plan = solve_chain(ChainProblem.build(6, [1, 2, 4], [1, 2, 4]))
    assert plan.cost == 0
    assert len(plan_to_sequence(plan, ChainLocator.column(0))) == 0
