import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from shadowgm.activator import imex_step
from shadowgm.brownian import brownian_increments, prob_sup_abs_exceeds
from shadowgm.harness import (BLOW_UP, COLUMNS, COMPLETED, POSITIVITY_FAILURE, STOPPED,
                              InitialData, MonitorConfig, RunSpec, TrajectoryError, aggregate,
                              convergence_study, coupled_step, run_ensemble, run_trajectory,
                              simulate_block)
from shadowgm.inhibitor import gamma_lower_bound, transform_step
from shadowgm.model import ModelParams, SpatialGrid, mean_power
from shadowgm.robin import build_operator

P = ModelParams(2, 3, 6, 1, epsilon=0.1, a=0.5, b=1.0)
GRID = SpatialGrid.line(1.0, 16)


def spec(**kw):
    base = dict(model=P, grid=GRID, horizon=1.0, dt=0.01, n_paths=6, master_seed=4)
    base.update(kw)
    return RunSpec(**base)


@pytest.mark.parametrize("kw", [
    dict(dt=0.0), dict(horizon=0.001), dict(n_paths=0), dict(scheme="rk"),
    dict(barrier=-1.0), dict(localized=True), dict(block_size=0), dict(dt=0.03),
    dict(model=ModelParams(2, 3, 6, 1, tau=2.0)),
    dict(model=ModelParams(2, 3, 6, 1), scheme="ode"),
    dict(model=ModelParams(3, 1, 1, 1)),
])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        spec(**kw)


def test_initial_profiles():
    assert InitialData("zero").field(GRID).max() == 0.0
    np.testing.assert_array_equal(InitialData("constant", 1.5).field(GRID), 1.5)
    assert InitialData("cosine", 2.0).field(GRID)[0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        InitialData("gauss").field(GRID)


def test_block_matches_hand_written_loop():
    s = spec(n_paths=1)
    (summary,), cols = simulate_block(s, [2], record=True)
    dB = brownian_increments(1.0, 100, 4, [2])[0]
    op = build_operator(GRID, P)
    A, g = s.initial.field(GRID), 1.0
    for db in dB:
        g_new = transform_step(g, mean_power(A, GRID, P.r), 0.01, db, P)
        A = imex_step(A, g_new, 0.01, op, P)
        g = g_new
    assert summary.status == COMPLETED
    assert summary.gamma_final == pytest.approx(g, rel=1e-12)
    assert cols["sup_A"][-1, 0] == pytest.approx(A.max(), rel=1e-12)


def test_coupled_step_agrees_with_block():
    s = spec(n_paths=1)
    dB = brownian_increments(1.0, 100, 4, [0])[0]
    op = build_operator(GRID, P)
    A, g = s.initial.field(GRID), 1.0
    for db in dB:
        A, g = coupled_step(A, g, db, 0.01, op, P)
    (summary,), _ = simulate_block(s, [0])
    assert summary.gamma_final == pytest.approx(g, rel=1e-12)


def test_results_do_not_depend_on_blocking():
    s = spec()
    together, _ = simulate_block(s, range(6))
    for k in (0, 3, 5):
        (alone,), _ = simulate_block(s, [k])
        assert repr(alone) == repr(together[k])


def test_trajectory_record():
    rec = run_trajectory(spec(), 1)
    assert set(rec.columns) == set(COLUMNS)
    assert len(rec.times) == 101 and rec.times[-1] == pytest.approx(1.0)
    assert rec.seed == (4, 1) and rec.status == COMPLETED
    assert len(list(rec.rows())) == 101
    # the lower-bound margin is measured against the running-supremum form
    lb = gamma_lower_bound(rec.times, rec.extra["B"], rec.extra["b_sup"], 1.0).sup_form
    np.testing.assert_allclose(rec.columns["lb_margin"], rec.columns["gamma"] - lb, atol=1e-12)
    assert np.all(np.diff(rec.columns["h_delta_integral"]) >= 0)


def test_localized_paths_stop_at_barrier():
    s = spec(barrier=0.3, localized=True, n_paths=20)
    sums, cols = simulate_block(s, range(20), record=True)
    stopped = [x for x in sums if x.status == STOPPED]
    assert stopped
    for x in stopped:
        assert x.stop_time is not None and x.end_time < x.stop_time
        assert x.b_sup >= 0.3
        j = int(round(x.end_time / 0.01))
        assert np.all(np.isnan(cols["gamma"][j + 1:, x.index]))
        assert np.all(cols["b_sup"][: j + 1, x.index] < 0.3)
    agg = aggregate(s, sums)
    assert agg["count_stopped_at_tau_K"] == len(stopped)
    assert agg["bad_set_fraction"] == pytest.approx(len(stopped) / 20)


#: outside the global regime; a slow inhibitor lets the activator run away
RUNAWAY = ModelParams(3, 1.01, 2, 0, tau=1000.0, eta=0.0, epsilon=0.1, a=0.0, b=1.0)


def test_blow_up_is_detected_and_marked_unbounded():
    s = spec(model=RUNAWAY, scheme="ode", dt=0.001, initial=InitialData("constant", 5.0),
             n_paths=3)
    rec = run_trajectory(s, 0)
    assert rec.status == BLOW_UP
    assert rec.columns["sup_A"][-1] > 1e6 and rec.summary.end_time < 1.0
    rep = run_ensemble(s)
    a = rep.aggregates
    assert a["blow_up_count"] == 3 and not a["global_regime"]
    assert not rep.unexpected_blow_up
    # blown paths are excluded from the empirical C(T)
    assert math.isnan(a["C_T_max"])


def test_low_threshold_flags_blow_up_in_regime():
    s = spec(monitor=MonitorConfig(blow_up_threshold=1.0), n_paths=2)
    rep = run_ensemble(s)
    assert rep.aggregates["blow_up_count"] == 2 and rep.unexpected_blow_up


def test_positivity_failure_with_em():
    s = spec(scheme="em", dt=0.5, horizon=20.0, n_paths=30, max_halvings=0,
             initial=InitialData("zero"))
    agg = run_ensemble(s).aggregates
    assert agg["count_positivity_failure"] > 0
    s = replace(s, max_halvings=10)
    assert run_ensemble(s).aggregates["count_positivity_failure"] == 0


def test_coupled_step_errors():
    op = build_operator(GRID, P)
    with pytest.raises(TrajectoryError) as info:
        coupled_step(np.full(16, 50.0), 0.01, 0.0, 0.5, op, P, blow_up_threshold=10.0, index=7,
                     t=0.5)
    assert info.value.status == BLOW_UP and info.value.index == 7
    with pytest.raises(TrajectoryError) as info:
        coupled_step(np.ones(16), 1.0, -5.0, 0.5, op, P, scheme="em")
    assert info.value.status == POSITIVITY_FAILURE
    with pytest.raises(ValueError):
        coupled_step(np.ones(16), 1.0, 0.0, 0.1, op, P, splitting="strang")
    with pytest.raises(ValueError):
        coupled_step(np.ones(16), 1.0, 0.0, 0.1, op, P, splitting="yoshida")


def test_strang_and_lie_agree_as_dt_shrinks():
    D = replace(P, eta=0.0)
    op = build_operator(GRID, D)
    A0 = InitialData().field(GRID)
    finals = {}
    for split in ("lie", "strang"):
        A, g = A0, 1.0
        for _ in range(400):
            A, g = coupled_step(A, g, 0.0, 0.0025, op, D, scheme="ode", splitting=split)
        finals[split] = g
    assert finals["lie"] == pytest.approx(finals["strang"], rel=5e-3)


def test_deterministic_paths_coincide():
    D = replace(P, eta=0.0)
    sums, _ = simulate_block(spec(model=D, scheme="ode"), range(4))
    assert len({x.gamma_final for x in sums}) == 1


def test_ensemble_is_independent_of_workers_and_blocks():
    s = spec(n_paths=10, block_size=3)
    one = run_ensemble(s, workers=1)
    two = run_ensemble(s, workers=2)
    assert repr(one) == repr(two)
    big = run_ensemble(replace(s, block_size=128))
    assert repr(big) == repr(one)


def test_aggregate_fields():
    s = spec(barrier=1.0)
    rep = run_ensemble(s)
    a = rep.aggregates
    assert a["n_paths"] == 6 and a["global_regime"]
    assert a["lb_violating_paths"] == 0 and not rep.violations
    assert a["lemma32_restricted_paths"] == sum(x.b_sup < 1.0 for x in rep.trajectories)
    assert a["C_T_min"] <= a["C_T_median"] <= a["C_T_max"] < math.inf
    assert a["bad_set_reference"] == pytest.approx(0.6289, abs=1e-3)


def test_convergence_study_exact_reference():
    s = spec(scheme="em", dt=1 / 16, initial=InitialData("zero"), n_paths=200)
    rep = convergence_study(s, refinements=4)
    assert rep.reference == "exact" and len(rep.errors) == 4
    assert np.all(np.diff(rep.errors) < 0)
    assert 0.3 < rep.slope < 0.8


def test_convergence_study_reference_choices():
    s = spec(dt=0.05, n_paths=4)
    assert convergence_study(s, 3).reference == "finest"
    assert len(convergence_study(s, 3, reference="richardson").errors) == 2
    with pytest.raises(ValueError):
        convergence_study(s, 2)
    with pytest.raises(ValueError):
        convergence_study(s, 3, reference="extrapolated")


def test_single_path_ensemble_is_the_trajectory():
    s = spec(n_paths=1, barrier=2.0)
    rec = run_trajectory(s, 0)
    (summary,) = run_ensemble(s).trajectories
    assert repr(summary) == repr(rec.summary)
    assert repr(run_trajectory(s, 0).columns) == repr(rec.columns)


def test_infinite_barrier_never_stops():
    rec = run_trajectory(spec(horizon=5.0, dt=0.05), 3)
    assert rec.status == COMPLETED and rec.summary.stop_time is None
    assert rec.times[-1] == pytest.approx(5.0)


def test_zero_activator_gives_lognormal_inhibitor():
    t = 1.0
    sums, _ = simulate_block(spec(initial=InitialData("zero"), dt=0.05), range(1000))
    log_g = np.log([x.gamma_final for x in sums])
    ks = stats.kstest(log_g, stats.norm(loc=-1.5 * t, scale=math.sqrt(t)).cdf)
    assert ks.statistic < 0.05


def test_mean_decays_without_reaction():
    # r = 1 makes mean_r the spatial mean; b = 1e300 switches the reaction off
    Q = ModelParams(1.5, 1, 1, 0, epsilon=0.3, a=0.0, b=1e300)
    s = spec(model=Q, horizon=2.0, dt=0.02)
    rec = run_trajectory(s, 0)
    m0 = rec.columns["mean_r"][0]
    np.testing.assert_allclose(rec.columns["mean_r"], m0 * np.exp(-rec.times), rtol=1e-8)


def test_stop_frequency_matches_reflection_estimate():
    K, n, dt = 0.5, 2000, 0.01
    s = spec(grid=SpatialGrid.line(1.0, 8), barrier=K, localized=True, n_paths=n)
    frac = run_ensemble(s).aggregates["count_stopped_at_tau_K"] / n
    # discrete monitoring behaves like a barrier raised by 0.5826 sqrt(dt)
    p = prob_sup_abs_exceeds(K + 0.5826 * math.sqrt(dt), 1.0)
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_lie_splitting_is_first_order_without_noise():
    D = replace(P, eta=0.0)
    s = spec(model=D, scheme="ode", dt=1 / 32, n_paths=1)
    rep = convergence_study(s, refinements=5, reference="richardson")
    assert 0.8 < rep.slope < 1.2


def test_statuses_partition_the_ensemble():
    s = spec(barrier=0.4, localized=True, n_paths=40)
    a = run_ensemble(s).aggregates
    total = sum(a["count_" + status.replace("-", "_")] for status in
                (COMPLETED, BLOW_UP, POSITIVITY_FAILURE, STOPPED))
    assert total == 40


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), amp=st.floats(0, 3), g0=st.floats(0.2, 3))
def test_inhibitor_stays_above_pathwise_bound(seed, amp, g0):
    s = spec(master_seed=seed, n_paths=1, horizon=2.0, dt=0.02,
             initial=InitialData("cosine", amp, g0))
    rec = run_trajectory(s, 0)
    assert rec.status == COMPLETED
    assert rec.summary.lb_violations == 0
    assert np.nanmin(rec.columns["lb_margin"]) >= -1e-9 * g0
    assert np.all(rec.columns["gamma"] > 0) and np.all(rec.columns["sup_A"] >= 0)
