"""
A small social-learning run
===========================

Agents repeatedly pick among options of unknown quality using only private,
walk-sampled popularity. Running regret shrinks as the population settles on
good options; noisier privacy settles more slowly.
"""

import math

import numpy as np

from socialdp import oracle
from socialdp.environment import OptionSet, quality_history
from socialdp.runner import ExperimentConfig, GraphSpec, check_conditions, simulate

base = ExperimentConfig(
    graph=GraphSpec("random_regular", 128, d=6),
    etas=(0.9, 0.6, 0.3),
    beta=0.6,
    mu=0.01,
    h_override=1,
    g_choice=32,
    rounds=60,
)
print("warnings:", *check_conditions(base)["warnings"], sep="\n  ")

###############################################################################
# Same seeds, three privacy levels.

for eps in (math.inf, 2.0, 0.5):
    cfg = base.replace(epsilon=eps)
    regret = np.mean([simulate(cfg, s).running_regret for s in range(3)], axis=0)
    print(f"eps={eps:>4}: running regret at rounds 10/30/60 = {regret[[9, 29, 59]].round(3)}")

###############################################################################
# Without privacy noise the population follows multiplicative weights driven
# by the same quality signals.

cfg = base.replace(epsilon=math.inf)
trace = simulate(cfg, seed=0)
mwu = oracle.mwu_reference(quality_history(OptionSet(cfg.etas), cfg.rounds, 0), cfg.beta, cfg.mu)
for r in (1, 10, 30, 60):
    print(f"round {r:2d}  popularity {trace.q_history()[r].round(3)}  weights {mwu[r].round(3)}")
