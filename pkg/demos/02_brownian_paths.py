"""Seeded Brownian paths, bridge refinement and the barrier tau_K.

Paths are addressed by (master seed, trajectory index), so any trajectory can
be regenerated alone.  Refinement inserts Brownian-bridge points and keeps the
coarse nodes exactly.
"""

import math

import numpy as np

from shadowgm.brownian import (estimate_bad_set_probability, first_passage, generate_path,
                               prob_sup_abs_exceeds, prob_sup_exceeds, refine_path)

path = generate_path(1.0, 8, seed=42, index=3)
fine = refine_path(path, 4)
print("coarse values   ", np.round(path.values, 3))
print("kept after x4   ", np.array_equal(fine.values[::4], path.values))
print("running sup |B| ", round(path.running_sup[-1], 3), "->", round(fine.running_sup[-1], 3))

tau = first_passage(generate_path(5.0, 5000, seed=1), 1.0)
print("first time |B| reaches 1:", tau)
print("a barrier that is never reached prints as", first_passage(path, 100.0))

# sup |B| is two-sided: its tail is about twice the one-sided reflection value
print("P(sup B >= 2)   =", round(prob_sup_exceeds(2.0, 1.0), 4))
print("P(sup |B| >= 2) =", round(prob_sup_abs_exceeds(2.0, 1.0), 4))
est = estimate_bad_set_probability(2.0, 1.0, 20_000, seed=3, steps=1000)
shifted = prob_sup_abs_exceeds(2.0 + 0.5826 * math.sqrt(1e-3), 1.0)
print(f"sampled on 1000 steps: {est:.4f} (discrete-monitoring prediction {shifted:.4f})")
for K in (1, 2, 3):
    print(f"  K = {K}: P(B*_1 >= K) ~ {estimate_bad_set_probability(K, 1.0, 5000, 4):.4f}")
