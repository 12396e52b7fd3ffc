"""
Random walks that sample the population
=======================================

Perturbed vectors travel as tokens on a Metropolis-Hastings walk. After enough
hops a token is equally likely to end at any node, so every agent's sample is
close to a uniform draw from the population.
"""

import numpy as np

from socialdp import oracle
from socialdp.dissemination import DisseminationParams, launch_round, run_round
from socialdp.graph import generate_erdos_renyi, mixing_model, transition_matrix
from socialdp.protocol import one_hot

g = generate_erdos_renyi(120, 0.06, seed=3)
tm = mixing_model(g)
print(f"{g.n} nodes, {g.num_edges} edges, degrees {min(g.degrees)}..{max(g.degrees)}")
print(f"spectral gap {tm.gap:.4f}, walk length {tm.walk_length}")

###############################################################################
# The walk matrix is symmetric with unit row sums, so the uniform
# distribution is stationary. Distance from uniform after t hops:

psi = transition_matrix(tm, g)
for t in (1, 5, 20, tm.walk_length):
    dist = oracle.walk_distributions(psi, t)
    print(f"t={t:3d}  max |P^t - 1/n| = {np.abs(dist - 1 / g.n).max():.2e}")

###############################################################################
# One dissemination round with every agent adopting option (i mod 3). Each
# agent launches 12 walks and forwards at most 12 tokens per slot.

params = DisseminationParams(h=1.0, g_of_n=12, walk_len=tm.walk_length)
state = launch_round([one_hot(i % 3, 3) for i in range(g.n)], params)
res = run_round(state, tm, np.random.default_rng(0))
print(f"slots {res.slots}, messages {res.messages}, busiest edge {res.max_edge_messages} per slot")
print(f"samples per agent: mean {res.v.mean():.1f}, min {res.v.min()}, max {res.v.max()}")
