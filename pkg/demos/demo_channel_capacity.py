"""
LoS channel, pair correlation and capacity
==========================================

A walk through the channel model: build the 8 x 8 ground array, place a
few UAVs on the flight lattice and look at how correlated their channel
columns are and what that means for capacity.
"""

import numpy as np

from uavswarm import ExperimentConfig, build_ura, channel_matrix, init_state, make_channel
from uavswarm.metrics import capacity, correlation_matrix, db_to_linear, rewards

# The default array: 64 antennas on a 0.35 m square.
ura = build_ura(8, 8, 0.05)
print("antennas:", ura.n_antennas, "extent (m):", ura.extent)

###############################################################################
# Every entry of the normalized channel has unit modulus; only the phase
# carries information.  Ten UAVs give a 64 x 10 matrix.
config = ExperimentConfig(output_dir="unused")
state = init_state(config, seed=0)
H = channel_matrix(state.positions, ura, config.wavelength)
print("H shape:", H.shape, "| all unit modulus:", np.allclose(np.abs(H), 1.0))

###############################################################################
# Pair correlations |g_kl| lie between 0 (orthogonal columns) and N = 64.
channel = make_channel(config)
G = np.abs(correlation_matrix(state, channel))
off = G[~np.eye(len(G), dtype=bool)]
print(f"|g_kl| off-diagonal: mean {off.mean():.2f}, max {off.max():.2f} (N = 64)")
print("local rewards r_m:", np.round(rewards(state, channel), 4))

###############################################################################
# Capacity by two independent routes, and the Jensen upper estimate.
for db in config.snr_db:
    rep = capacity(H, float(db_to_linear(db)))
    print(f"{db:5.1f} dB  det {rep.det_form:7.3f}  eigen {rep.eigen_form:7.3f}  "
          f"jensen {rep.jensen_approx:7.3f}  rank {rep.numerical_rank}")

###############################################################################
# A fully correlated configuration collapses to rank one.
ones = np.ones((64, 10))
print("all-ones rank:", capacity(ones, 10.0).numerical_rank)
