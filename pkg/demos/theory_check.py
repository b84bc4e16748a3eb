"""Watching the Lyapunov function contract.

With exact gradients and a stepsize inside the guaranteed range, the Lyapunov
value ``||xbar - x*||^2 + c1 consensus + c2 tracking`` must shrink by at least
the contraction factor every round. With noise it instead settles near a
floor that scales linearly with the stepsize.

Run:  python3 demos/theory_check.py
"""

import numpy as np

from flexgt import AlgoConfig, TheoryParams, TopologySpec, build_weight_matrix, generate_problem, run
from flexgt.analysis import contraction_factor, max_stepsize, steady_state

W = build_weight_matrix(TopologySpec("ring", 20))
prob = generate_problem(20, 2, 5.0, 0.0, 0)
mu, L = prob.constants()
print(f"ring(20): rho_W = {W.rho:.5f}, mu = {mu}, L = {L:.3f}")

# %% Deterministic contraction, one line per d1
for d1 in (10, 30, 60):
    tp = TheoryParams(mu=mu, L=L, rho=W.rho, d1=d1, d2=2, n=20)
    tp = tp.replace(gamma=max_stepsize(tp))
    q = contraction_factor(tp)
    tr = run(prob, AlgoConfig("flexgt", d1, 2, tp.gamma, rounds=500), W)
    V = np.array([tr.initial.lyapunov] + [m.lyapunov for m in tr.metrics])
    worst = np.max(V[1:] / np.maximum(V[:-1], 1e-300))
    print(
        f"d1={d1:2d}: gamma={tp.gamma:.2e} factor={q:.5f} "
        f"worst observed ratio={worst:.5f} final opt_gap={tr.metrics[-1].opt_gap:.1e}"
    )

# %% Noise floor halves with the stepsize
noisy = generate_problem(20, 2, 5.0, 0.1, 0)
W = build_weight_matrix(TopologySpec("exponential", 20))
tp = TheoryParams(mu=mu, L=L, rho=W.rho, n=20)
gmax = max_stepsize(tp)
levels = []
for scale in (0.5, 0.25):
    cfg = AlgoConfig("flexgt", 1, 1, scale * gmax, rounds=12_000)
    vals = [steady_state([m.opt_gap for m in run(noisy.with_seed(s), cfg, W).metrics]) for s in range(5)]
    levels.append(np.mean(vals))
    print(f"gamma = {scale} * bound: steady-state opt_gap {levels[-1]:.3e}")
print(f"ratio {levels[0] / levels[1]:.2f} (linear scaling predicts 2)")
