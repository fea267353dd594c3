"""Pair correlations, UAV rewards, the potential, and MIMO capacity.

Rewards measure how far each neighborhood channel matrix is from having
orthogonal columns.  For UAV ``m`` with neighbor set ``N_m`` the local
reward is

    r_m = -1 / (N * P_m) * sum_{k < l in N_m + {m}} |g_kl|,
    g_kl = sum_n exp(-j 2 pi (d_nl - d_nk) / lambda),

with ``P_m`` the number of unordered pairs, so ``r_m`` lies in [-1, 0].
The neighborhood reward is ``R_m = r_m + sum_{i in N_m} r_i`` and the
potential is ``phi = sum_m r_m``.

All reward functions take a :class:`~uavswarm.geometry.LosChannel`,
which bundles the antenna array with the wavelength.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .state import LocalView, SwarmState, local_view


class PairCorrelation(NamedTuple):
    k: int
    l: int
    value: complex
    magnitude: float


@dataclass(frozen=True)
class RewardBreakdown:
    own: float
    neighbor_sum: float
    total: float


@dataclass(frozen=True)
class CapacityReport:
    snr_linear: float
    det_form: float
    eigen_form: float
    jensen_approx: float
    numerical_rank: int
    eigenvalues: np.ndarray


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@lru_cache(maxsize=64)
def _pairs(k: int):
    return np.triu_indices(k, 1)


def _correlations(phases: np.ndarray, rows, cols) -> np.ndarray:
    """g for index pairs ``(rows[i], cols[i])``; ``phases`` is ``(k, N)``."""
    diff = phases[cols] - phases[rows]
    return np.exp(-2j * np.pi * diff).sum(axis=-1)


def reward_from_phases(phases: np.ndarray) -> float:
    """Local reward of a neighborhood given its phase-fraction rows."""
    k, n = phases.shape
    if k < 2:
        return 0.0
    rows, cols = _pairs(k)
    mags = np.abs(_correlations(phases, rows, cols))
    return -float(mags.sum()) / (n * len(rows))


def view_reward(view: LocalView, channel) -> float:
    """``r`` of the view's owner, computed from the view alone."""
    return reward_from_phases(channel.phases(view.coordinates()))


def pair_correlation(k: int, l: int, state: SwarmState, channel) -> PairCorrelation:
    ph = channel.phases(state.positions[[k, l]])
    value = complex(_correlations(ph, np.array([0]), np.array([1]))[0])
    return PairCorrelation(int(k), int(l), value, abs(value))


def correlation_matrix(state: SwarmState, channel) -> np.ndarray:
    """Full ``M x M`` matrix of ``g_kl`` (diagonal exactly ``N``)."""
    ph = channel.phases(state.positions)
    m = len(ph)
    rows, cols = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return _correlations(ph, rows.ravel(), cols.ravel()).reshape(m, m)


def local_reward(m: int, state: SwarmState, channel) -> float:
    return view_reward(local_view(m, state), channel)


def rewards(state: SwarmState, channel) -> np.ndarray:
    """Vector of ``r_m`` for every UAV."""
    return np.array([local_reward(m, state, channel) for m in range(state.n_uavs)])


def neighborhood_reward(m: int, state: SwarmState, channel) -> RewardBreakdown:
    own = local_reward(m, state, channel)
    nb = 0.0
    for i in state.graph.neighbors[m]:
        nb += local_reward(i, state, channel)
    return RewardBreakdown(own, nb, own + nb)


def potential(state: SwarmState, channel) -> float:
    total = 0.0
    for m in range(state.n_uavs):
        total += local_reward(m, state, channel)
    return total


def numerical_rank(H) -> int:
    """Count of singular values above ``max(N, M) * eps * sigma_max``."""
    H = np.atleast_2d(np.asarray(H))
    s = np.linalg.svd(H, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(H.shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def gram_eigenvalues(H) -> np.ndarray:
    """Eigenvalues of ``H^H H`` in descending order.

    Same non-zero spectrum as ``R = H H^H`` but only ``M x M``.
    """
    H = np.atleast_2d(np.asarray(H))
    return np.linalg.eigvalsh(H.conj().T @ H)[::-1]


def capacity(H, snr_linear: float) -> CapacityReport:
    """Capacity of ``H`` (N x M) with the power split equally over M transmitters.

    ``det_form`` evaluates ``log2 det(I_N + rho/M H H^H)`` directly while
    ``eigen_form`` sums over the eigenvalues of the Gram matrix; the two
    are independent routes to the same number.
    """
    if not snr_linear > 0:
        raise ConfigError(f"snr must be positive, got {snr_linear}")
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n, m = H.shape
    a = snr_linear / m
    sign, logdet = np.linalg.slogdet(np.eye(n) + a * (H @ H.conj().T))
    det_form = float(logdet / np.log(2.0))
    lam = gram_eigenvalues(H)
    eigen_form = float(np.sum(np.log2(1.0 + a * np.clip(lam, 0.0, None))))
    p = numerical_rank(H)
    trace = float(np.real(np.trace(H.conj().T @ H)))
    jensen = p * float(np.log2(1.0 + snr_linear * trace / p**2)) if p else 0.0
    return CapacityReport(float(snr_linear), det_form, eigen_form, jensen, p, lam)


def jensen_gap(H, snr_linear: float) -> float:
    """``jensen_approx - eigen_form``; non-negative up to rounding."""
    rep = capacity(H, snr_linear)
    return rep.jensen_approx - rep.eigen_form


def capacity_from_eigenvalues(lam, n_tx: int, snr_linear) -> np.ndarray:
    """Eigen-form capacity for several SNRs at once."""
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    snr = np.atleast_1d(np.asarray(snr_linear, dtype=float))
    return np.log2(1.0 + np.outer(snr / n_tx, lam)).sum(axis=1)
