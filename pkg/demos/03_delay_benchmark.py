"""Solving the delay benchmark u' = -2u + 0.5 u(t - pi) + cos t.

On the harmonic ansatz the point delay at pi flips the sign of u, so the
bounded whole-line solution is exactly (10/29) cos t + (4/29) sin t.  The
solver knows nothing about this: it runs the outer recursion over the
lambda-schedule and converges geometrically at the declared rate
K0/(-omega) = 0.5 (measured ~0.25 here).
"""

import time

import numpy as np

from delayline import GridFunction, GridSpec, SolverConfig
from delayline import make_operator, run_recursion, theoretical_bounds

g = GridSpec(-30.0, 30.0, 2e-3)
op = make_operator("delay_linear",
                   {"a": -1.0, "b": 0.5, "r": np.pi, "h": "cos",
                    "omega": -1.0})
psi = GridFunction(g, np.zeros(g.n_nodes))
cfg = SolverConfig(g, lambda_schedule=(0.2, 0.1, 0.05, 0.025, 0.0125),
                   tol_outer=1e-6, burn_in=10.0)

tic = time.perf_counter()
u, rep = run_recursion(op, psi, cfg)
wall = time.perf_counter() - tic

print(f"converged: {rep.converged} after {len(rep.outer_diffs)} outer stages "
      f"({wall:.1f} s)")
print(f"declared outer ratio K0/(-omega) = "
      f"{theoretical_bounds(op, 0.0125)['outer_ratio']:.2f}")
print("measured outer diffs and ratios:")
for n, d in enumerate(rep.outer_diffs, start=1):
    r = f"  ratio {rep.outer_ratios[n - 2]:.3f}" if n >= 2 else ""
    print(f"  n={n:2d}  |u_n - u_(n-1)|_sup = {d:.3e}{r}")

ref = (10 / 29) * np.cos(g.times) + (4 / 29) * np.sin(g.times)
mask = g.times >= g.t_min + 10.0
err = np.max(np.abs(u.values[mask, 0] - ref[mask]))
print(f"\nsup error vs harmonic balance (burn-in trimmed): {err:.3e}")
print("the residual error is the O(lambda) smoothing bias at the")
print("schedule floor, plus the O(dt^2) sampling of cos t.")
