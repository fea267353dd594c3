"""
Exact stationary behaviour on a tiny swarm
==========================================

Two UAVs, a 2 x 2 array and six lattice points: small enough to write
down the whole transition matrix of the learning chain.  As beta grows,
the stationary distribution piles up on the potential maximizers.
"""

import numpy as np

from uavswarm.oracle import (TINY, enumerate_states, maximizer_mass, resistance_regression,
                             reward_table, stationary_distribution, transition_matrix)

space = enumerate_states(TINY.lattice, TINY.n_uavs)
table = reward_table(space, TINY)
print(f"{len(space)} joint states, max potential {table.phi.max():.4f}")

for beta in (2, 4, 6, 8):
    P = transition_matrix(space, TINY, beta, table=table)
    mu = stationary_distribution(P)
    print(f"beta = {beta}: mass on maximizers {maximizer_mass(mu, table.phi):.4f}")

###############################################################################
# Resistances: slope of log P(s -> s') against log eps versus the closed form.
rows = resistance_regression(space, TINY, table=table)
rows.sort(key=lambda r: -r["resistance"])
print(" resistance   fitted slope")
for r in rows[:8]:
    print(f"  {r['resistance']:9.4f}   {r['slope']:9.4f}")
print("largest absolute deviation:", round(max(r["abs_error"] for r in rows), 4))
