"""Choosing the number of gossip sweeps (d1) and local steps (d2).

The closed-form complexity bounds give a weighted cost
``w1 * communication + w2 * computation`` for every pair; the sweep also
measures the cost empirically (gossip steps plus per-node gradient calls
until the averaged gap stays below eps).

Run:  python3 demos/tradeoff.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from flexgt.analysis import TheoryParams, minimize_weighted_cost
from flexgt.harness import paper_config, run_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/tradeoff")

# %% Theory surface at the experimental setting (L = 1 as in the stepsize rule)
tp = TheoryParams(mu=0.1, L=1.0, rho=0.30864197530864196, sigma=0.1, n=20, eps=1e-5)
best = minimize_weighted_cost(tp, 6, 6)
np.set_printoptions(precision=0, suppress=True, linewidth=120)
print("theory weighted cost, rows d1 = 1..6, columns d2 = 1..6")
print(best.grid)
print(f"theory argmin: d1={best.d1}, d2={best.d2}")

# %% Relative prices change the answer
for w1, w2 in [(1.0, 0.0), (0.0, 1.0), (10.0, 1.0), (1.0, 10.0)]:
    b = minimize_weighted_cost(tp.replace(w1=w1, w2=w2), 6, 6)
    print(f"  w1={w1:<4} w2={w2:<4} -> d1={b.d1}, d2={b.d2}")

# %% Empirical counterpart (noiseless, true-L stepsize)
sweep = run_sweep(
    paper_config(
        stepsize={"rule": "paper_rule", "c": 1.0, "L": "computed"},
        problem={"n": 20, "p": 10, "mu": 0.1, "sigma": 0.0, "seed": 0},
        rounds=2000,
    ),
    6,
    6,
    out,
)
print("empirical cost to eps=1e-5 (NaN: not reached)")
print(sweep.empirical_grid)
print(f"empirical argmin: {sweep.empirical_argmin}")
print(f"heatmaps: {out / 'sweep_theory.svg'}, {out / 'sweep_empirical.svg'}")
