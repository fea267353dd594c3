import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavswarm.errors import ConfigError
from uavswarm.geometry import channel_matrix
from uavswarm.metrics import (RewardBreakdown, capacity, capacity_from_eigenvalues, correlation_matrix,
                              db_to_linear, gram_eigenvalues, jensen_gap, local_reward,
                              neighborhood_reward, numerical_rank, pair_correlation, potential,
                              reward_from_phases, rewards)
from uavswarm.state import Lattice, NeighborGraph, apply_action, make_state, restricted_actions

from conftest import path_graph, random_state

# rows of a 4-point DFT: mutually orthogonal channel columns
DFT_ROWS = np.array([[0, 0, 0, 0], [0, .25, .5, .75], [0, .5, 0, .5], [0, .75, .5, .25]])


class StubChannel:
    """Channel that assigns prescribed phase rows to lattice points."""

    def __init__(self, table):
        self.table = {tuple(map(float, k)): np.asarray(v, float) for k, v in table.items()}
        self.n_antennas = 4

    def phases(self, positions):
        P = np.atleast_2d(positions)
        return np.array([self.table[tuple(map(float, p))] for p in P])


LAT = Lattice((5, 5, 5), 1.0, (0.0, 0.0, 1.0))


def _stub_state(rows, graph):
    cells = [(i, 0, 0) for i in range(len(rows))]
    st_ = make_state(cells, LAT, graph)
    return st_, StubChannel({tuple(p): r for p, r in zip(st_.positions, rows)})


def test_self_correlation_is_n(default_channel):
    s = make_state([(1, 2, 3), (4, 5, 6)], Lattice((21, 21, 24), 5.0, (0, 0, 5)))
    G = correlation_matrix(s, default_channel)
    np.testing.assert_array_equal(np.diag(G), 64 + 0j)
    np.testing.assert_array_equal(np.abs(G), np.abs(G).T)


def test_identical_phase_rows_give_full_correlation():
    assert reward_from_phases(np.zeros((2, 8))) == -1.0
    st_, ch = _stub_state([DFT_ROWS[1], DFT_ROWS[1]], NeighborGraph.complete(2))
    assert pair_correlation(0, 1, st_, ch).magnitude == pytest.approx(4.0)
    assert local_reward(0, st_, ch) == pytest.approx(-1.0)


def test_pair_correlation_equals_inner_product(default_config, default_channel):
    rng = np.random.default_rng(11)
    lat = Lattice.from_volume(default_config.volume, default_config.lattice_step)
    for _ in range(20):
        s = random_state(rng, lat, 2)
        H = channel_matrix(s.positions, default_channel.array, 0.01)
        ip = np.vdot(H[:, 0], H[:, 1])
        assert pair_correlation(0, 1, s, default_channel).magnitude == pytest.approx(
            abs(ip), rel=1e-9, abs=1e-9)


def test_isolated_uav_scores_zero(default_channel):
    s = make_state([(0, 0, 0), (20, 20, 20)], Lattice((21, 21, 24), 5.0, (0, 0, 5)), radius=50)
    assert s.graph.neighbors[0] == ()
    assert local_reward(0, s, default_channel) == 0.0
    assert neighborhood_reward(0, s, default_channel) == RewardBreakdown(0.0, 0.0, 0.0)
    assert potential(s, default_channel) == 0.0


def test_orthogonal_neighbor_scores_zero():
    st_, ch = _stub_state(DFT_ROWS[:2], NeighborGraph.complete(2))
    assert local_reward(0, st_, ch) == pytest.approx(0.0, abs=1e-12)


def test_star_with_orthogonal_columns_total_zero():
    A = np.zeros((3, 3), dtype=bool)
    A[0, 1:] = A[1:, 0] = True
    st_, ch = _stub_state(DFT_ROWS[:3], NeighborGraph(A))
    br = neighborhood_reward(0, st_, ch)
    assert br.total == pytest.approx(0.0, abs=1e-12)


def test_reward_bounds_and_breakdown(default_config, default_channel):
    rng = np.random.default_rng(5)
    lat = Lattice.from_volume(default_config.volume, default_config.lattice_step)
    s = random_state(rng, lat, 3, radius=200.0)
    r = rewards(s, default_channel)
    assert np.all((r <= 0) & (r >= -1))
    br = neighborhood_reward(1, s, default_channel)
    assert br.own == local_reward(1, s, default_channel)
    assert br.total == pytest.approx(sum(local_reward(i, s, default_channel) for i in range(3)))
    assert potential(s, default_channel) == pytest.approx(r.sum())


def test_unilateral_move_changes_potential_like_reward(small_channel):
    rng = np.random.default_rng(2)
    lat = Lattice((6, 6, 4), 5.0, (0, 0, 5))
    for _ in range(50):
        s = random_state(rng, lat, 4, radius=12.0)
        m = int(rng.integers(4))
        a = rng.choice(restricted_actions(m, s))
        s2 = apply_action(s, m, a)
        dR = neighborhood_reward(m, s2, small_channel).total - \
            neighborhood_reward(m, s, small_channel).total
        dphi = potential(s2, small_channel) - potential(s, small_channel)
        assert abs(dR - dphi) <= 1e-12


def test_path_graph_neighbor_rewards_not_global(small_channel):
    # the end UAV of a path only sees its one neighbour
    s = make_state([(0, 0, 0), (1, 0, 0), (2, 0, 0)], LAT, path_graph(3))
    assert local_reward(0, s, small_channel) == pytest.approx(
        reward_from_phases(small_channel.phases(s.positions[[1, 0]])))


def test_identity_capacity():
    n = 6
    rep = capacity(np.eye(n), float(n))
    assert rep.det_form == pytest.approx(n)
    assert rep.eigen_form == pytest.approx(n)
    assert rep.numerical_rank == n
    assert jensen_gap(np.eye(n), 3.0) == pytest.approx(0.0, abs=1e-12)


def test_all_ones_rank_one_closed_form():
    N, M, rho = 64, 10, 10.0
    H = np.ones((N, M), dtype=complex)
    rep = capacity(H, rho)
    assert rep.numerical_rank == 1
    assert rep.eigen_form == pytest.approx(np.log2(1 + rho / M * N * M))
    assert rep.det_form == pytest.approx(rep.eigen_form, rel=1e-9)


def test_single_column_jensen_tight():
    H = np.exp(2j * np.pi * np.random.default_rng(0).random((16, 1)))
    assert jensen_gap(H, 7.0) == pytest.approx(0.0, abs=1e-12)


def test_multi_column_rank_one_gap_positive():
    # with power split over M transmitters the rank-1 case is not tight
    assert jensen_gap(np.ones((8, 3)), 10.0) > 0


def test_random_det_vs_eigen_and_gap():
    rng = np.random.default_rng(9)
    for _ in range(20):
        H = np.exp(-2j * np.pi * rng.random((64, 10)))
        rep = capacity(H, 10.0)
        assert abs(rep.det_form - rep.eigen_form) <= 1e-9 * abs(rep.det_form)
        assert rep.jensen_approx - rep.eigen_form >= -1e-9


def test_capacity_from_eigenvalues_matches():
    rng = np.random.default_rng(1)
    H = np.exp(-2j * np.pi * rng.random((64, 10)))
    lam = gram_eigenvalues(H)
    snr = db_to_linear([0, 10, 20])
    got = capacity_from_eigenvalues(lam, 10, snr)
    for c, rho in zip(got, snr):
        assert c == pytest.approx(capacity(H, rho).det_form, rel=1e-10)
    assert np.all(np.diff(lam) <= 1e-9)


def test_rank_and_snr_validation():
    assert numerical_rank(np.zeros((3, 2))) == 0
    assert numerical_rank(np.array([[1, 2], [2, 4.0]])) == 1
    with pytest.raises(ConfigError):
        capacity(np.eye(2), 0.0)
    assert db_to_linear(10) == pytest.approx(10.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(2, 12), st.floats(0.01, 1000.0), st.integers(0, 2**31))
def test_capacity_forms_agree(m, n, rho, seed):
    H = np.exp(-2j * np.pi * np.random.default_rng(seed).random((n, m)))
    rep = capacity(H, rho)
    assert rep.det_form == pytest.approx(rep.eigen_form, rel=1e-9, abs=1e-9)
    assert rep.jensen_approx >= rep.eigen_form - 1e-9
