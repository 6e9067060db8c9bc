"""
Loading, per-batch loss and measurement.

By default loss is deferred: each batch multiplies the corruption of the atoms it
touches by p_alpha or p_nu and that of every other present atom by the idle survival
exp(-t / tau), and survival is only sampled when the array is imaged. The immediate
mode samples every atom's survival after each batch instead.
"""

from __future__ import annotations

import numpy as np

from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.control.operations import Batch, BatchKind, ContractError, Extract
from trap_prisma.lattice.array_state import EMPTY, ArrayState, Configuration
from trap_prisma.lattice.grid import GridSpec


def sample_loading(spec: GridSpec, params: LossConfig, rng: np.random.Generator) -> ArrayState:
    """Each static trap is loaded independently with probability epsilon."""
    occupied = rng.random((spec.height, spec.width)) < params.epsilon
    return ArrayState.from_occupancy(spec, occupied)


def sample_exact_loading(spec: GridSpec, n_atoms: int, rng: np.random.Generator) -> ArrayState:
    """Exactly `n_atoms` atoms placed uniformly without replacement."""
    if not 0 <= n_atoms <= spec.n_traps:
        raise ValueError(f"Cannot place {n_atoms} atoms in {spec.n_traps} traps")
    flat = np.zeros(spec.n_traps, dtype=bool)
    flat[rng.choice(spec.n_traps, size=n_atoms, replace=False)] = True
    return ArrayState.from_occupancy(spec, flat.reshape(spec.height, spec.width))


def batch_survival(
    state: ArrayState, batch: Batch, params: LossConfig
) -> tuple[np.ndarray, np.ndarray]:
    """
    Survival factor of every trap for one batch, for the static and the dynamic layer.
    Factors at vacant traps are 1.
    """
    idle = params.idle_survival(batch.duration(params))
    operated = params.p_alpha if batch.kind == BatchKind.TRANSFER else params.p_nu

    static = np.where(state.static_occupied, idle, 1.0)
    dynamic = np.where(state.dynamic_occupied, idle, 1.0)
    for op in batch.ops:
        col, row = op.at
        if isinstance(op, Extract):
            if state.static_ids[row, col] != EMPTY:
                static[row, col] = operated
        elif state.dynamic_ids[row, col] != EMPTY:
            dynamic[row, col] = operated
    return static, dynamic


def charge_batch_loss(state: ArrayState, batch: Batch, params: LossConfig) -> ArrayState:
    """Multiplies corruptions in place by the batch's survival factors."""
    static, dynamic = batch_survival(state, batch, params)
    state.static_corruption *= static
    state.dynamic_corruption *= dynamic
    return state


def sample_batch_loss(
    state: ArrayState, batch: Batch, params: LossConfig, rng: np.random.Generator
) -> int:
    """Removes atoms that do not survive the batch. Returns the number removed."""
    static, dynamic = batch_survival(state, batch, params)
    lost = 0
    for ids, corruption, factor in (
        (state.static_ids, state.static_corruption, static),
        (state.dynamic_ids, state.dynamic_corruption, dynamic),
    ):
        occupied = ids != EMPTY
        dead = occupied & (rng.random(ids.shape) >= factor)
        ids[dead] = EMPTY
        corruption[dead] = 0.0
        lost += int(dead.sum())
    return lost


def measure(state: ArrayState, rng: np.random.Generator) -> tuple[Configuration, ArrayState]:
    """
    Images the static layer: each atom is detected with probability equal to its
    corruption, undetected atoms are removed and survivors reset to corruption 1.
    """
    if state.n_dynamic:
        raise ContractError(
            f"Cannot measure with {state.n_dynamic} atoms still in dynamic traps"
        )
    projected = state.copy()
    occupied = projected.static_occupied
    survive = occupied & (rng.random(occupied.shape) < projected.static_corruption)
    projected.static_ids[occupied & ~survive] = EMPTY
    projected.static_corruption[:] = np.where(survive, 1.0, 0.0)
    return projected.configuration(), projected
