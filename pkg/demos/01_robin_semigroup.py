"""The linear part of the activator equation: -eps^2 A'' + A with Robin walls.

We build the ghost-node operator, compare the Crank-Nicolson semigroup with a
dense matrix exponential, and watch positivity and the sup-norm contraction.
"""

import numpy as np
from scipy.linalg import expm

from shadowgm.model import SpatialGrid
from shadowgm.robin import EllipticOperator, apply_semigroup

op = EllipticOperator(SpatialGrid.line(1.0, 16), epsilon=0.3, a=0.5)
M = op.dense()
print("operator on 16 nodes, Gershgorin bound", round(op.gershgorin(), 3))
print("smallest eigenvalue", op.smallest_eigenvalue(), "(above 1 because a > 0)")

rng = np.random.default_rng(0)
f = rng.uniform(0, 1, 16)
for t in (0.01, 0.5, 5.0):
    ref = expm(-t * M) @ f
    err = np.linalg.norm(apply_semigroup(op, t, f) - ref) / np.linalg.norm(ref)
    print(f"t = {t:5}: relative error against expm {err:.1e}, "
          f"sub-steps {op.substeps(t)}")

# a spike spreads out but never goes negative and never grows
spike = np.zeros(16)
spike[8] = 1.0
out = apply_semigroup(op, 0.05, spike)
print("spike after t = 0.05: min", out.min(), "max", round(out.max(), 4))

# with Neumann walls constants are eigenfunctions with eigenvalue 1
flat = EllipticOperator(SpatialGrid.line(1.0, 16), 0.3, 0.0)
print("Neumann constant mode at t = 1:", apply_semigroup(flat, 1.0, np.ones(16))[0],
      "vs e^-1 =", np.exp(-1))
