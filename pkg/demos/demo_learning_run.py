"""
One run of decentralized log-linear learning
============================================

Runs the learning algorithm for a single seed at the default scenario and
prints how the potential, mean reward, channel rank and capacity evolve.
"""

import numpy as np

from uavswarm import ExperimentConfig, run

config = ExperimentConfig(output_dir="unused")
record = run(config, seed=0)
print(f"stopped after {record.iterations} iterations ({record.stop_reason})")

###############################################################################
# Every 50th iteration.  Capacity columns follow ``config.snr_db``.
print(" iter     phi   mean r  rank  " + "  ".join(f"C@{db:g}dB" for db in config.snr_db))
for t in range(0, record.iterations, 50):
    caps = "  ".join(f"{c:7.2f}" for c in record.capacity[t])
    print(f"{t + 1:5d} {record.phi[t]:7.3f} {record.mean_reward[t]:8.4f} {record.rank[t]:5d}  {caps}")

###############################################################################
# How often did the chosen UAV explore, and how often was the move kept?
print(f"explored {record.explored.mean():.1%} of slots, "
      f"accepted {record.accepted[record.explored].mean():.1%} of explorations")
print("mean stay probability over the last 50 slots:",
      round(float(np.nanmean(record.stay_probability[-50:])), 4))
print("final positions (m):")
print(record.final_state.positions)
