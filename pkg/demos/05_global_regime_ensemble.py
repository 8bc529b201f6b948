"""A small ensemble in the global-existence regime and what the monitors see.

(p-1)/r = 1/6 is below min(2/3, q/(s+1)), so no path should blow up, the
inhibitor must stay above gamma0 exp(-3t/2 - B*_t), and on {B*_T < K} the
integrated h_delta estimate must hold.
"""

from shadowgm.harness import InitialData, RunSpec, run_ensemble, run_trajectory
from shadowgm.model import ModelParams, SpatialGrid, check_global_regime

P = ModelParams(2, 3, 6, 1, epsilon=0.1, a=0.5, b=1.0)
print(check_global_regime(P, 1))
spec = RunSpec(P, SpatialGrid.line(1.0, 64), horizon=2.0, dt=1e-3, n_paths=128,
               master_seed=11, barrier=1.5, initial=InitialData("cosine", 2.0, 1.0))
report = run_ensemble(spec)
for key in ("blow_up_count", "lb_violating_paths", "lb_min_margin", "bad_set_fraction",
            "bad_set_reference", "lemma32_restricted_paths", "lemma32_violating_paths",
            "C_T_max", "C_ell_g1_max", "C_ell_g2_max"):
    print(f"{key:26} {report.aggregates[key]}")

rec = run_trajectory(spec, 0)
print("\none trajectory, every 400th row:")
print(" t      gamma    sup_A    h_alpha_beta  lb_margin")
for j in range(0, len(rec.times), 400):
    c = rec.columns
    print(f" {c['t'][j]:4.1f}  {c['gamma'][j]:7.4f}  {c['sup_A'][j]:7.4f}  "
          f"{c['h_alpha_beta'][j]:12.6f}  {c['lb_margin'][j]:.3e}")
