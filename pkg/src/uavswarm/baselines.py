"""Reference deployment strategies: random moving, static, exhaustive search.

All strategies start from the same seeded initial placement as the
learning algorithm and emit the same :class:`~uavswarm.engine.RunRecord`,
so their curves are directly comparable.  Exhaustive search uses global
information and is therefore outside the decentralized regime; it only
serves as an upper reference.
"""
from __future__ import annotations

import itertools

import numpy as np

from .config import ExperimentConfig
from .engine import STOP_MAX_ITERATIONS, Recorder, RunRecord, StepOutcome, dynamics_rng, \
    make_channel, run as run_learning
from .errors import InfeasibleError
from .metrics import potential
from .state import (ACTIONS, Action, NeighborGraph, SwarmState, apply_action, init_state,
                    restricted_actions)

JOINT_MAX_UAVS = 4
KINDS = ("learning", "random-moving", "static", "exhaustive")


def random_moving_step(state: SwarmState, rng, dynamic_graph=False):
    """One uniformly chosen UAV takes a uniformly random legal action (stay included)."""
    m = int(rng.integers(state.n_uavs))
    legal = restricted_actions(m, state)
    a = legal[int(rng.integers(len(legal)))]
    new = apply_action(state, m, a, check=False, dynamic_graph=dynamic_graph)
    return StepOutcome(m, a is not Action.STAY, a, a is not Action.STAY, 1.0), new


def static_deployment(state: SwarmState) -> SwarmState:
    return state


def _best_unilateral(m, state, channel, dynamic_graph=False):
    best_state, best_phi = state, potential(state, channel)
    best_action = Action.STAY
    for a in restricted_actions(m, state):
        if a is Action.STAY:
            continue
        cand = apply_action(state, m, a, check=False, dynamic_graph=dynamic_graph)
        phi = potential(cand, channel)
        if phi > best_phi:
            best_state, best_phi, best_action = cand, phi, a
    return best_action, best_state


def joint_profiles(state: SwarmState):
    """Yield every jointly feasible ``(actions, cells)`` one-step profile."""
    M = state.n_uavs
    for profile in itertools.product(ACTIONS, repeat=M):
        cells = state.cells + np.array([a.value for a in profile])
        if not all(state.lattice.contains(c) for c in cells.tolist()):
            continue
        if len({tuple(c) for c in cells.tolist()}) != M:
            continue
        yield profile, cells


def exhaustive_step(state: SwarmState, channel, mode: str = "sequential", t: int = 0,
                    dynamic_graph=False):
    """Exhaustive potential maximization over one step.

    ``joint`` enumerates every action profile of all UAVs (7**M, so only
    M <= 4 is accepted) and picks the potential maximizer.  ``sequential``
    lets UAV ``t mod M`` pick its potential-maximizing legal action.  Ties
    keep the current position.
    """
    M = state.n_uavs
    if mode == "joint":
        if M > JOINT_MAX_UAVS:
            raise InfeasibleError(f"joint exhaustive search needs M <= {JOINT_MAX_UAVS}, got {M}")
        best_cells, best_phi = state.cells, potential(state, channel)
        for _, cells in joint_profiles(state):
            phi = potential(state.with_cells(cells), channel)
            if phi > best_phi:
                best_cells, best_phi = cells, phi
        if best_cells is state.cells:
            return state
        new = state.with_cells(best_cells)
        if dynamic_graph:
            new = new.with_cells(best_cells, graph=NeighborGraph.from_positions(
                new.positions, state.radius))
        return new
    if mode != "sequential":
        raise ValueError(f"unknown exhaustive mode {mode!r}")
    _, new = _best_unilateral(t % M, state, channel, dynamic_graph)
    return new


def _simulate(config: ExperimentConfig, seed, kind: str, channel=None) -> RunRecord:
    channel = channel or make_channel(config)
    state = init_state(config, seed)
    rng = dynamics_rng(seed)
    label = kind
    if kind == "exhaustive":
        label = f"exhaustive-{config.exhaustive_mode}"
        if config.exhaustive_mode == "joint" and state.n_uavs > JOINT_MAX_UAVS:
            raise InfeasibleError(
                f"joint exhaustive search needs M <= {JOINT_MAX_UAVS}, got {state.n_uavs}")
    rec = Recorder(config, channel, state, kind, seed)
    rec.rec.label = label
    for t in range(config.max_iterations):
        if kind == "random-moving":
            out, state = random_moving_step(state, rng, config.dynamic_graph)
        elif kind == "static":
            out, state = None, static_deployment(state)
        else:
            before = state
            state = exhaustive_step(state, channel, config.exhaustive_mode, t,
                                    config.dynamic_graph)
            out = StepOutcome(t % state.n_uavs if config.exhaustive_mode == "sequential" else -1,
                              True, Action.STAY, not state.same_positions(before), 1.0)
        state = state.with_cells(state.cells, iteration=t + 1)
        rec.record(state, out)
    return rec.finish(state, STOP_MAX_ITERATIONS)


def run_strategy(config: ExperimentConfig, seed, kind: str, channel=None) -> RunRecord:
    """Run any strategy (learning included) for one seed."""
    if kind == "learning":
        return run_learning(config, seed, channel)
    if kind not in KINDS:
        raise ValueError(f"unknown strategy {kind!r}")
    return _simulate(config, seed, kind, channel)
