import math

import numpy as np
import pytest

from uavswarm.config import ExperimentConfig
from uavswarm.errors import InfeasibleError
from uavswarm.oracle import (TINY, OracleInstance, RewardTable, enumerate_states,
                             exact_potential_audit, is_aperiodic, is_irreducible, is_pure_nash,
                             is_potential_stable, maximizer_mass, move_structure, moves,
                             resistance, reward_table, stationary_distribution,
                             transition_matrix)
from uavswarm.state import Lattice


@pytest.fixture(scope="module")
def tiny():
    space = enumerate_states(TINY.lattice, TINY.n_uavs)
    return space, reward_table(space, TINY)


@pytest.mark.parametrize("shape, m, count", [((2, 1, 1), 1, 2), ((2, 2, 1), 2, 12),
                                             ((3, 1, 2), 2, 30)])
def test_state_counts(shape, m, count):
    space = enumerate_states(Lattice(shape, 1.0), m)
    assert len(space) == count
    assert len({p.tobytes() for p in space.profiles}) == count


def test_budget():
    with pytest.raises(InfeasibleError):
        enumerate_states(Lattice((21, 21, 24), 5.0), 3)


def test_rows_stochastic(tiny):
    space, table = tiny
    for beta in (0.5, 2.0, 8.0):
        P = transition_matrix(space, TINY, beta, table=table).matrix
        assert np.all(P >= 0)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_frozen_chain(tiny):
    space, table = tiny
    P = transition_matrix(space, TINY, 60.0, table=table).matrix
    assert np.max(P - np.diag(np.diag(P))) < 1e-25


def test_single_uav_two_states_symmetric():
    inst = OracleInstance(1, 2, 2, 1.0, 0.5, Lattice((2, 1, 1), 10.0, (0, 0, 5)))
    P = transition_matrix(enumerate_states(inst.lattice, 1), inst, 3.0).matrix
    assert P[0, 1] == P[1, 0] > 0
    np.testing.assert_allclose(stationary_distribution(P), [0.5, 0.5], atol=1e-12)


def test_single_uav_flat_landscape():
    # constant potential: detailed balance gives mass proportional to move count
    inst = OracleInstance(1, 2, 2, 1.0, 0.5, Lattice((3, 1, 2), 10.0, (0, 0, 5)))
    space = enumerate_states(inst.lattice, 1)
    n_moves = np.zeros(len(space))
    for s, _, _, _ in moves(space, inst):
        n_moves[s] += 1
    mu = stationary_distribution(transition_matrix(space, inst, 3.0))
    np.testing.assert_allclose(mu, n_moves / n_moves.sum(), atol=1e-12)


def test_two_state_chain():
    P = np.array([[0.9, 0.1], [0.1, 0.9]])
    np.testing.assert_allclose(stationary_distribution(P), [0.5, 0.5], atol=1e-14)


def test_fixed_point_and_concentration(tiny):
    space, table = tiny
    P = transition_matrix(space, TINY, 6.0, table=table)
    assert is_irreducible(P) and is_aperiodic(P)
    mu = stationary_distribution(P)
    assert np.max(np.abs(mu @ P.matrix - mu)) <= 1e-12
    assert maximizer_mass(mu, table.phi) > 0.9


def test_resistance_formula(tiny):
    space, _ = tiny
    s, m, _, s2 = next(iter(moves(space, TINY)))
    R = np.zeros((len(space), 2))
    R[s, m], R[s2, m] = -0.1, -0.4
    fake = RewardTable(R, np.zeros(len(space)))
    assert resistance(s, s2, m, space, TINY, fake) == pytest.approx(0.3)
    assert resistance(s2, s, m, space, TINY, fake) == 0.0
    with pytest.raises(ValueError):
        resistance(s, s, m, space, TINY, fake)


def test_maximizer_is_stable(tiny):
    space, table = tiny
    best = TINY.state(space.profiles[int(np.argmax(table.phi))])
    ch = TINY.channel()
    assert is_potential_stable(best, ch) and is_pure_nash(best, ch)
    worst = TINY.state(space.profiles[int(np.argmin(table.phi))])
    assert not is_potential_stable(worst, ch)


def test_move_structure_small():
    rep = move_structure(Lattice((2, 2, 1), 1.0), 2)
    assert rep == {"states": 12, "moves": rep["moves"], "irreversible": 0, "reversible": True,
                   "strong_components": 1, "reachable": True}
    # a single cell with a single UAV has no moves and is trivially reachable
    assert move_structure(Lattice((1, 1, 1), 1.0), 1)["reachable"]


def test_potential_audit_small():
    cfg = ExperimentConfig(n_uavs=3, volume=(20.0, 20.0, 20.0), comm_radius=10.0, ura_nx=2,
                           ura_ny=2, output_dir="unused")
    assert exact_potential_audit(cfg, trials=100) <= 1e-12
    solo = cfg.replace(n_uavs=1)
    assert exact_potential_audit(solo, trials=20) == 0.0


def test_stationary_masses_values(tiny):
    space, table = tiny
    masses = []
    for beta in (2, 4, 6, 8):
        mu = stationary_distribution(transition_matrix(space, TINY, beta, table=table))
        masses.append(maximizer_mass(mu, table.phi))
    assert masses == sorted(masses)
    assert not math.isclose(masses[0], masses[-1])
