"""
Learning against the reference strategies
=========================================

Runs learning, random moving and static deployment over a few seeds,
writes the usual CSV/JSON outputs plus the figure tables, and prints the
late-run averages.  Output goes to ``$UAVSWARM_OUT`` (default ``runs``).
"""

import numpy as np

from uavswarm import ExperimentConfig, emit_figure_data, run_experiment

config = ExperimentConfig(seeds=tuple(range(5)), strategies=("learning", "random-moving", "static"))
result = run_experiment(config)
print("wrote", len(result.files), "files under", config.output_dir)

###############################################################################
# Late-run averages over seeds (last 50 iterations).
for kind in config.strategies:
    recs = result.by_strategy(kind)
    reward = np.mean([r.mean_reward[-50:].mean() for r in recs])
    cap10 = np.mean([r.capacity[-50:, 1].mean() for r in recs])
    print(f"{kind:14s} mean r_m {reward:8.4f}   C@10dB {cap10:6.2f} bits/s/Hz")

###############################################################################
# Figure tables for external plotting.
for fig in ("fig3", "fig4", "fig5", "fig6", "fig7"):
    for path in emit_figure_data(result.records, fig, config.output_dir):
        print(" ", path)
