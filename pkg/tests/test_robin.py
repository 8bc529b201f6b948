import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh, expm

from shadowgm.model import ModelParams, SpatialGrid
from shadowgm.robin import (EllipticOperator, apply_semigroup, build_operator,
                            sup_norm_contraction_check)


def op16(eps=0.3, a=0.5, n=16, L=1.0):
    return EllipticOperator(SpatialGrid.line(L, n), eps, a)


def test_hand_assembled_three_nodes():
    # h = 1/2, eps = 1, a = 0: ghost node mirrors the first interior node
    op = EllipticOperator(SpatialGrid.line(1.0, 3), 1.0, 0.0)
    c = 4.0
    expected = np.array([[1 + 2 * c, -2 * c, 0], [-c, 1 + 2 * c, -c], [0, -2 * c, 1 + 2 * c]])
    np.testing.assert_allclose(op.dense(), expected)
    np.testing.assert_allclose(op.apply(np.eye(3)), expected.T)


def test_hand_assembled_robin_rows():
    op = EllipticOperator(SpatialGrid.line(1.0, 3), 0.5, 2.0)
    h, eps, a = 0.5, 0.5, 2.0
    c = eps ** 2 / h ** 2
    M = op.dense()
    assert M[0, 0] == pytest.approx(1 + 2 * c + 2 * eps * a / h)
    assert M[2, 2] == pytest.approx(1 + 2 * c + 2 * eps * a / h)
    assert M[0, 1] == pytest.approx(-2 * c)


def test_neumann_preserves_constants():
    op = op16(a=0.0)
    np.testing.assert_allclose(op.apply(np.ones(16)), np.ones(16), atol=1e-12)


def test_robin_lifts_the_spectrum():
    op = op16(a=0.5)
    w = op.grid.weights
    # symmetric in the weighted inner product, so eigh on W^1/2 M W^-1/2
    S = np.sqrt(w)[:, None] * op.dense() / np.sqrt(w)[None, :]
    np.testing.assert_allclose(S, S.T, atol=1e-10)
    lam = eigh(0.5 * (S + S.T), eigvals_only=True)
    assert lam.min() > 1
    assert lam.max() <= op.gershgorin() + 1e-9


def test_neumann_smallest_eigenvalue_is_one():
    op = op16(a=0.0)
    lam = np.linalg.eigvals(op.dense()).real
    assert lam.min() == pytest.approx(1.0, abs=1e-10)


def test_build_operator_uses_params():
    op = build_operator(SpatialGrid.line(1.0, 8), ModelParams(2, 3, 6, 1, epsilon=0.2, a=0.7))
    assert op.epsilon == 0.2 and op.a == 0.7


def test_matrix_2d_is_kronecker_sum():
    g = SpatialGrid.box((1.0, 1.0), 5)
    op = EllipticOperator(g, 0.4, 0.3)
    one = EllipticOperator(SpatialGrid.line(1.0, 5), 0.4, 0.3).dense() - np.eye(5)
    expected = np.eye(25) + np.kron(one, np.eye(5)) + np.kron(np.eye(5), one)
    np.testing.assert_allclose(op.dense(), expected, atol=1e-12)
    np.testing.assert_allclose(op.apply(np.eye(25)), expected.T, atol=1e-12)


def test_semigroup_identity_and_rejects_negative_time():
    op = op16()
    f = np.linspace(0, 1, 16)
    np.testing.assert_array_equal(apply_semigroup(op, 0.0, f), f)
    with pytest.raises(ValueError):
        apply_semigroup(op, -0.1, f)


def test_constant_mode_decays_as_exponential():
    op = op16(a=0.0)
    for t in (0.1, 1.0, 3.0):
        np.testing.assert_allclose(apply_semigroup(op, t, np.ones(16)), np.exp(-t), rtol=1e-8)


@pytest.mark.parametrize("t", [0.001, 0.3, 1.0, 3.0])
def test_matches_dense_exponential(t):
    op = op16()
    f = np.random.default_rng(1).uniform(0, 1, 16)
    ref = expm(-t * op.dense()) @ f
    np.testing.assert_allclose(apply_semigroup(op, t, f), ref, rtol=1e-6, atol=1e-6 * abs(ref).max())


def test_matches_dense_exponential_2d():
    op = EllipticOperator(SpatialGrid.box((1.0, 1.0), 8), 0.2, 0.4)
    f = np.random.default_rng(2).uniform(0, 1, 64)
    ref = expm(-0.5 * op.dense()) @ f
    np.testing.assert_allclose(apply_semigroup(op, 0.5, f), ref, rtol=1e-6)


def test_propagator_matches_direct_application():
    op = op16()
    f = np.random.default_rng(3).uniform(0, 1, (4, 16))
    np.testing.assert_allclose(f @ op.propagator(0.05), apply_semigroup(op, 0.05, f), rtol=1e-12)
    assert op.propagator(0.05) is op.propagator(0.05)


def test_contraction_examples():
    op = op16(a=0.0)
    assert sup_norm_contraction_check(op, 1.0, np.ones(16))
    spike = np.zeros(16)
    spike[7] = 1.0
    assert sup_norm_contraction_check(op, 0.1, spike)
    assert sup_norm_contraction_check(op, 0.0, spike)


def test_steep_operator_stays_positive():
    # eps/h large: many sub-steps are needed for positivity of Crank-Nicolson
    op = EllipticOperator(SpatialGrid.line(1.0, 64), 1.0, 2.0)
    spike = np.zeros(64)
    spike[0] = 1.0
    out = apply_semigroup(op, 0.01, spike)
    assert out.min() >= -1e-12


fields = st.lists(st.floats(0, 10), min_size=16, max_size=16).map(np.array)
times = st.floats(0.0, 4.0)


@settings(max_examples=40, deadline=None)
@given(f=fields, t=times, a=st.floats(0, 2), eps=st.floats(0.05, 1.0))
def test_positive_and_contracting(f, t, a, eps):
    op = op16(eps=eps, a=a)
    out = apply_semigroup(op, t, f)
    assert out.min() >= -1e-12
    assert np.abs(out).max() <= np.abs(f).max() + 1e-12


@settings(max_examples=25, deadline=None)
@given(f=fields, t=st.floats(0.01, 2.0), s=st.floats(0.01, 2.0))
def test_semigroup_composition(f, t, s):
    op = op16()
    both = apply_semigroup(op, t + s, f)
    twice = apply_semigroup(op, t, apply_semigroup(op, s, f))
    np.testing.assert_allclose(twice, both, rtol=1e-8, atol=1e-8 * max(1.0, f.max()))


@settings(max_examples=25, deadline=None)
@given(f=fields, g=fields, t=times, c=st.floats(-3, 3))
def test_semigroup_is_linear(f, g, t, c):
    op = op16()
    lhs = apply_semigroup(op, t, f + c * g)
    rhs = apply_semigroup(op, t, f) + c * apply_semigroup(op, t, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + abs(f).max() + abs(c * g).max()))
