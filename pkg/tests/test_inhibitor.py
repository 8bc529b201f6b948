import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from shadowgm.brownian import brownian_increments, stream
from shadowgm.inhibitor import (PositivityError, drift, em_step, em_step_halving, exact_gbm,
                                gamma_lower_bound, literal_gamma_bound, ode_step, step,
                                transform_step)
from shadowgm.model import ModelParams

P = ModelParams(2, 3, 6, 1)
DET = ModelParams(2, 3, 6, 1, eta=0.0)


def test_em_step_by_hand():
    Q = ModelParams(2, 3, 6, 2, tau=2.0, eta=4.0)
    g, m, dt, dB = 1.5, 0.7, 0.01, 0.03
    expected = g + dt * (-g + m / g ** 2) / 2 + (2 / 2) * g * dB
    assert em_step(g, m, dt, dB, Q) == pytest.approx(expected, rel=1e-15)


def test_em_step_rejects_bad_input_and_flags_negative_result():
    with pytest.raises(ValueError):
        em_step(-1.0, 1.0, 0.1, 0.0, P)
    with pytest.raises(ValueError):
        em_step(1.0, -1.0, 0.1, 0.0, P)
    with pytest.raises(ValueError):
        em_step(1.0, 1.0, 0.0, 0.0, P)
    with pytest.raises(PositivityError) as info:
        em_step(np.array([1.0, 1.0]), 0.0, 0.1, np.array([0.0, -2.0]), P)
    np.testing.assert_array_equal(info.value.mask, [False, True])
    assert em_step(1.0, 0.0, 0.1, -2.0, P, check=False) < 0


def test_halving_recovers_positivity():
    g = em_step_halving(1.0, 0.5, 0.5, -1.2, P, stream(0, 1))
    assert g > 0
    # a single halving splits the increment exactly
    rng = stream(4, 4)
    mid = 0.5 * -1.2 + math.sqrt(0.5 / 4) * stream(4, 4).standard_normal()
    expected = em_step(em_step(1.0, 0.5, 0.25, mid, P, check=False), 0.5, 0.25, -1.2 - mid, P,
                       check=False)
    assert em_step(1.0, 0.5, 0.5, -1.2, P, check=False) < 0 < expected
    assert em_step_halving(1.0, 0.5, 0.5, -1.2, P, rng, max_halvings=1) == pytest.approx(expected)


def test_halving_gives_up():
    with pytest.raises(PositivityError):
        em_step_halving(1.0, 0.0, 0.5, -5.0, P, stream(0, 2), max_halvings=0)
    # positive steps are untouched
    assert em_step_halving(1.0, 0.5, 0.01, 0.01, P, stream(0, 3)) == em_step(1.0, 0.5, 0.01, 0.01, P)


def test_transform_without_source_is_exact_gbm():
    B = brownian_increments(2.0, 400, 1, [0])[0]
    g = 1.3
    for dB in B:
        g = transform_step(g, 0.0, 2.0 / 400, dB, P)
    assert g == pytest.approx(float(exact_gbm(2.0, B.sum(), 1.3, P)), rel=1e-12)


def test_transform_on_flat_path_matches_closed_form():
    # with B = 0 on the step, Y' = -3/2 k Y + k m, k = s + 1; the midpoint
    # quadrature leaves a local error of order dt^3
    s, m, g = 1.0, 0.8, 0.9
    k = s + 1
    c = 1.5 * k
    errs = []
    for dt in (0.04, 0.02, 0.01):
        y = math.exp(-c * dt) * g ** k + k * m * (1 - math.exp(-c * dt)) / c
        errs.append(abs(transform_step(g, m, dt, 0.0, P) ** k - y))
    assert errs[1] < 1e-6
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 2.8)


def test_transform_matches_fine_ito_solution():
    # reference: Euler-Maruyama on a much finer grid driven by the same path
    rng = np.random.default_rng(3)
    T, n, fine = 0.5, 10, 2000
    dW = rng.normal(0, math.sqrt(T / fine), fine)
    g_ref = 1.0
    for db in dW:
        g_ref = em_step(g_ref, 0.5, T / fine, db, P)
    g = 1.0
    for db in dW.reshape(n, -1).sum(axis=1):
        g = transform_step(g, 0.5, T / n, db, P)
    assert abs(g - g_ref) < 0.02


def test_transform_needs_normalisation():
    with pytest.raises(ValueError):
        transform_step(1.0, 1.0, 0.1, 0.0, ModelParams(2, 3, 6, 1, tau=2.0))


def test_ode_fixed_point():
    m = 2.0
    star = m ** (1 / (DET.s + 1))
    assert drift(star, m, DET) == pytest.approx(0.0, abs=1e-15)
    assert ode_step(star, m, 0.1, DET) == pytest.approx(star, rel=1e-14)


def test_ode_step_is_fourth_order():
    m, g0, T = 1.5, 0.4, 1.0
    ref = solve_ivp(lambda t, y: drift(y, m, DET), (0, T), [g0], rtol=1e-13, atol=1e-14).y[0, -1]
    errs = []
    for n in (10, 20, 40):
        g = g0
        for _ in range(n):
            g = ode_step(g, m, T / n, DET)
        errs.append(abs(g - ref))
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(slopes > 3.7)


def test_ode_step_requires_no_noise():
    with pytest.raises(ValueError):
        ode_step(1.0, 1.0, 0.1, P)


def test_step_dispatch():
    assert step("em", 1.0, 0.5, 0.1, 0.2, P) == em_step(1.0, 0.5, 0.1, 0.2, P)
    assert step("transform", 1.0, 0.5, 0.1, 0.2, P) == transform_step(1.0, 0.5, 0.1, 0.2, P)
    assert step("ode", 1.0, 0.5, 0.1, 0.2, DET) == ode_step(1.0, 0.5, 0.1, DET)
    with pytest.raises(ValueError):
        step("milstein", 1.0, 0.5, 0.1, 0.2, P)


def test_gbm_mean():
    B = brownian_increments(1.0, 1, 7, range(200_000))[:, 0]
    g = exact_gbm(1.0, B, 1.0, P)
    # E gamma_t = gamma0 exp(-t / tau)
    assert g.mean() == pytest.approx(math.exp(-1.0), rel=0.01)


def test_lower_bounds():
    b = gamma_lower_bound(2.0, 0.3, 0.5, 1.2)
    assert b.pathwise == pytest.approx(1.2 * math.exp(-3 + 0.3))
    assert b.sup_form == pytest.approx(1.2 * math.exp(-3 - 0.5))
    with pytest.raises(ValueError):
        gamma_lower_bound(-1.0, 0, 0, 1.0)


def test_literal_bound():
    assert math.isnan(literal_gamma_bound(1.0, 0.2, 1.0, DET))
    assert literal_gamma_bound(1.0, 0.2, 1.1, P) == pytest.approx(1.1 * math.exp(-1.5 - 0.2))
    Q = ModelParams(2, 3, 6, 1, tau=2.0, eta=4.0)
    assert literal_gamma_bound(1.0, 0.2, 1.0, Q) == pytest.approx(
        2 ** 0.5 * math.exp(-1.5 / 4 - 0.1))


pos = st.floats(1e-3, 50)


@settings(max_examples=80, deadline=None)
@given(g=pos, m=st.floats(0, 50), dt=st.floats(1e-5, 0.5), dB=st.floats(-3, 3),
       s=st.floats(0, 4))
def test_transform_positive_and_above_source_free_flow(g, m, dt, dB, s):
    Q = ModelParams(2, 3, 6, s)
    out = transform_step(g, m, dt, dB, Q)
    assert out > 0 and math.isfinite(out)
    # the source only adds mass, so one step dominates the pathwise lower bound
    assert out >= g * math.exp(-1.5 * dt + dB) * (1 - 1e-12)


@settings(max_examples=50, deadline=None)
@given(g=pos, m1=st.floats(0, 10), m2=st.floats(0, 10), dt=st.floats(1e-4, 0.2),
       dB=st.floats(-1, 1))
def test_transform_monotone_in_source(g, m1, m2, dt, dB):
    lo, hi = sorted((m1, m2))
    assert transform_step(g, lo, dt, dB, P) <= transform_step(g, hi, dt, dB, P) * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0, 20), b=st.floats(-5, 5), extra=st.floats(0, 5), g0=pos)
def test_sup_form_is_weaker(t, b, extra, g0):
    bound = gamma_lower_bound(t, b, abs(b) + extra, g0)
    assert bound.sup_form <= bound.pathwise
