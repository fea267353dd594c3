import itertools

import numpy as np
import pytest

from uavswarm.baselines import exhaustive_step, random_moving_step, run_strategy, static_deployment
from uavswarm.config import ExperimentConfig
from uavswarm.errors import InfeasibleError
from uavswarm.metrics import potential
from uavswarm.state import ACTIONS, Lattice, NeighborGraph, init_state, make_state

from conftest import random_state

SMALL = dict(n_uavs=4, volume=(30.0, 30.0, 30.0), comm_radius=20.0, output_dir="unused",
             ura_nx=2, ura_ny=2)


def test_random_moving_blocked_uav_stays():
    s = make_state([(0, 0, 0), (1, 0, 0)], Lattice((2, 1, 1), 5.0))
    rng = np.random.default_rng(0)
    for _ in range(20):
        _, s2 = random_moving_step(s, rng)
        assert s2.same_positions(s)


def test_random_moving_single_mover():
    cfg = ExperimentConfig(**SMALL)
    s = init_state(cfg, 0)
    rng = np.random.default_rng(0)
    moves = 0
    for _ in range(500):
        out, s2 = random_moving_step(s, rng)
        moved = np.flatnonzero(np.any(s2.cells != s.cells, axis=1))
        assert len(moved) <= 1
        moves += len(moved)
        s = s2
    assert moves > 300


def test_random_moving_reproducible():
    cfg = ExperimentConfig(max_iterations=100, **SMALL)
    a = run_strategy(cfg, 3, "random-moving")
    b = run_strategy(cfg, 3, "random-moving")
    np.testing.assert_array_equal(a.rewards, b.rewards)


def test_static_is_constant():
    cfg = ExperimentConfig(max_iterations=50, **SMALL)
    s = init_state(cfg, 1)
    assert static_deployment(s) is s
    rec = run_strategy(cfg, 1, "static")
    assert np.all(rec.mean_reward == rec.mean_reward[0])
    np.testing.assert_array_equal(rec.final_state.cells, rec.initial_state.cells)


def test_single_uav_modes_agree(small_channel):
    s = make_state([(2, 2, 1)], Lattice((5, 5, 3), 5.0))
    a = exhaustive_step(s, small_channel, "joint")
    b = exhaustive_step(s, small_channel, "sequential", t=0)
    assert a.same_positions(b)


def test_joint_matches_brute_force(small_channel):
    lat = Lattice((3, 3, 2), 5.0, (0, 0, 5))
    rng = np.random.default_rng(8)
    for _ in range(5):
        s = random_state(rng, lat, 2)
        s = make_state(s.cells, lat, NeighborGraph.complete(2))
        best = potential(s, small_channel)
        for a0, a1 in itertools.product(ACTIONS, repeat=2):
            c = s.cells + np.array([a0.value, a1.value])
            if all(lat.contains(x) for x in c.tolist()) and tuple(c[0]) != tuple(c[1]):
                best = max(best, potential(s.with_cells(c), small_channel))
        got = exhaustive_step(s, small_channel, "joint")
        assert potential(got, small_channel) == pytest.approx(best, abs=1e-14)


def test_joint_refuses_large_swarms(small_channel):
    s = make_state([(i, 0, 0) for i in range(5)], Lattice((5, 1, 1), 5.0))
    with pytest.raises(InfeasibleError):
        exhaustive_step(s, small_channel, "joint")
    with pytest.raises(ValueError):
        exhaustive_step(s, small_channel, "greedy")


def test_sequential_never_lowers_potential():
    cfg = ExperimentConfig(max_iterations=40, strategies=("exhaustive",), **SMALL)
    rec = run_strategy(cfg, 0, "exhaustive")
    assert rec.label == "exhaustive-sequential"
    assert np.all(np.diff(rec.phi) >= -1e-12)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        run_strategy(ExperimentConfig(**SMALL), 0, "teleport")
