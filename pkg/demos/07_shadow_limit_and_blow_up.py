"""The noise-free limit and what happens outside the global regime.

Without noise and with spatially constant data the inhibitor settles where
gamma^(s+1) equals the mean of A^r.  Outside the regime, with a sluggish
inhibitor, the activator runs away and the run is flagged as blow-up.
"""

import math

from shadowgm.harness import InitialData, RunSpec, run_trajectory
from shadowgm.model import ModelParams, SpatialGrid, check_global_regime

P = ModelParams(2, 3, 6, 1, epsilon=1.0, a=0.0, b=0.1, eta=0.0)
rec = run_trajectory(RunSpec(P, SpatialGrid.line(1.0, 32), 50.0, 0.01, scheme="ode",
                             initial=InitialData("constant", 1.0, 1.0)), 0)
g, m = rec.columns["gamma"][-1], rec.columns["mean_r"][-1]
print(f"T = 50: gamma = {g:.10f}, (mean A^r)^(1/2) = {math.sqrt(m):.10f}")

Q = ModelParams(3, 1.01, 2, 0, tau=1000.0, eta=0.0, epsilon=0.1, a=0.0, b=1.0)
print("\n", check_global_regime(Q, 1))
rec = run_trajectory(RunSpec(Q, SpatialGrid.line(1.0, 16), 1.0, 0.001, scheme="ode",
                             initial=InitialData("constant", 5.0, 1.0)), 0)
print(f"status {rec.status} at t = {rec.summary.end_time}, "
      f"sup A = {rec.columns['sup_A'][-1]:.3g}")
