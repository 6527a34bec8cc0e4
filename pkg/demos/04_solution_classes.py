"""Qualitative classes of the computed limits.

Periodic forcing with a periodic left extension gives a periodic limit;
an anti-periodic forcing (without the delay term) gives an anti-periodic
one; a quasi-periodic forcing gives a limit whose epsilon-almost periods
show up in a shift scan.  All three claims are checked on solved
trajectories, not on formulas.
"""

import numpy as np

from delayline import GridFunction, GridSpec, SolverConfig
from delayline import make_operator, run_recursion
from delayline.qualitative import (almost_period_scan,
                                   antiperiodicity_residual,
                                   periodicity_residual)

schedule = (0.2, 0.1, 0.05, 0.025)
g = GridSpec(-20.0, 20.0, 2e-3)
cfg = SolverConfig(g, lambda_schedule=schedule, tol_outer=1e-6, burn_in=10.0)

print("1) periodic: benchmark with periodic left extension")
op = make_operator("delay_linear",
                   {"a": -1.0, "b": 0.5, "r": np.pi, "h": "cos"})
psi = GridFunction(g, np.zeros(g.n_nodes), ("periodic", 2 * np.pi))
u, _ = run_recursion(op, psi, cfg)
print(f"   periodicity residual at T = 2 pi: "
      f"{periodicity_residual(u, 2 * np.pi, burn_in=10.0):.3e}")

print("2) anti-periodic: u' = -u + cos t + omega u, cos(t + pi) = -cos t")
op2 = make_operator("delay_linear", {"a": -1.0, "b": 0.0, "r": np.pi,
                                     "h": "cos"})
u2, _ = run_recursion(op2, GridFunction(g, np.zeros(g.n_nodes)), cfg)
print(f"   anti-periodicity residual at T = pi: "
      f"{antiperiodicity_residual(u2, np.pi, burn_in=10.0):.3e}")

print("3) quasi-periodic forcing sin t + sin sqrt(2) t")
g3 = GridSpec(-60.0, 60.0, 5e-3)
cfg3 = SolverConfig(g3, lambda_schedule=schedule, tol_outer=1e-6,
                    burn_in=10.0)
op3 = make_operator("delay_linear", {"a": -1.0, "b": 0.25, "r": np.pi,
                                     "h": "quasi_periodic"})
u3, _ = run_recursion(op3, GridFunction(g3, np.zeros(g3.n_nodes)), cfg3)
scan = almost_period_scan(u3, epsilon=0.25, s_max=50.0, ds=0.01,
                          burn_in=10.0)
hits = [s for s in scan["hits"] if s > 0.5]
print(f"   nontrivial eps-almost periods (eps = 0.25): "
      f"{[round(s, 2) for s in hits[:6]]}")
print(f"   largest gap between hits: {scan['largest_gap']:.2f}")
print("   (a finite-window scan statistic, not a certification of the")
print("    almost-periodic function class)")
