"""Discrete ``-eps^2 Δ + I`` under Robin boundary conditions and its semigroup.

The boundary rows use a ghost node eliminated through the Robin condition
``eps dA/dnu + a A = 0``::

    A_ghost = A_inner - 2 h (a / eps) A_boundary

at both ends of every axis, which keeps the stencil second order.  The
resulting matrix is self-adjoint in the trapezoid-weighted inner product, so
its spectrum is real and lies in ``[1, gershgorin]``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal, lapack
from scipy.sparse.linalg import splu

from .model import ModelParams, SpatialGrid

#: spectral accuracy target of the sub-stepped semigroup, relative to ||S(t)||
SEMIGROUP_RTOL = 1e-9

#: cached dense propagators are only built up to this many nodes
DENSE_PROPAGATOR_MAX = 1024

#: up to this many nodes the sub-step product is formed by repeated squaring
DENSE_SQUARING_MAX = 256


def _axis_stencil(n: int, h: float, epsilon: float, a: float):
    """Tridiagonal ``-eps^2 d^2/dx^2`` with the ghost-node Robin closure."""
    c = epsilon ** 2 / h ** 2
    diag = np.full(n, 2 * c)
    lower = np.full(n - 1, -c)
    upper = np.full(n - 1, -c)
    diag[0] = diag[-1] = 2 * c + 2 * epsilon * a / h
    upper[0] = -2 * c
    lower[-1] = -2 * c
    return lower, diag, upper


class EllipticOperator:
    """Matrix-free stencil for ``M = -eps^2 Δ_h + I`` on a :class:`SpatialGrid`.

    Immutable after construction; propagators for repeated step sizes are
    memoised on the instance.
    """

    def __init__(self, grid: SpatialGrid, epsilon: float, a: float):
        if grid.points < 3:
            raise ValueError("need at least 3 nodes per axis")
        self.grid = grid
        self.epsilon = float(epsilon)
        self.a = float(a)
        self.stencils = tuple(
            _axis_stencil(grid.points, h, self.epsilon, self.a) for h in grid.spacing
        )
        self._propagators: dict[float, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.grid.size

    def matrix(self) -> sp.csr_matrix:
        return _sparse_matrix(self)

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``M f`` along the last axis of ``f``."""
        f = np.asarray(f, dtype=float)
        batch = f.shape[:-1]
        u = f.reshape(batch + self.grid.shape)
        out = u.copy()
        for axis, (lo, d, up) in enumerate(self.stencils):
            ax = len(batch) + axis
            u_ = np.moveaxis(u, ax, -1)
            k = d * u_
            k[..., 1:] += lo * u_[..., :-1]
            k[..., :-1] += up * u_[..., 1:]
            out += np.moveaxis(k, -1, ax)
        return out.reshape(f.shape)

    def diag_max(self) -> float:
        return 1.0 + sum(float(d.max()) for _, d, _ in self.stencils)

    def gershgorin(self) -> float:
        bound = 1.0
        for lo, d, up in self.stencils:
            rows = d.copy()
            rows[1:] += np.abs(lo)
            rows[:-1] += np.abs(up)
            bound += float(rows.max())
        return bound

    def smallest_eigenvalue(self) -> float:
        """Exact bottom of the spectrum, from a symmetric tridiagonal eigensolve per axis."""
        lam = 1.0
        for lo, d, up in self.stencils:
            # diagonal similarity makes the stencil symmetric; lo * up > 0 entrywise
            off = -np.sqrt(lo * up)
            lam += float(eigh_tridiagonal(d, off, eigvals_only=True, select="i",
                                          select_range=(0, 0))[0])
        return lam

    def substeps(self, t: float, rtol: float = SEMIGROUP_RTOL) -> int:
        return _choose_substeps(
            float(t), self.smallest_eigenvalue(), self.gershgorin(), self.diag_max(), rtol
        )

    def propagator(self, t: float) -> np.ndarray:
        """Dense row-action matrix ``P`` with ``f @ P ≈ apply_semigroup(self, t, f)``.

        The two agree bit-for-bit on grids of at most ``DENSE_SQUARING_MAX``
        nodes.  Results are memoised per ``t``.
        """
        t = float(t)
        if t not in self._propagators:
            if self.size <= DENSE_SQUARING_MAX:
                P = _squared_propagator(self, t)
            else:
                P = apply_semigroup(self, t, np.eye(self.size))
            P.setflags(write=False)
            self._propagators[t] = P
        return self._propagators[t]


@lru_cache(maxsize=None)
def _choose_substeps(t, lam_lo, lam_hi, dmax, rtol) -> int:
    """Smallest Crank-Nicolson sub-step count meeting positivity and accuracy.

    Positivity of ``I - (k/2) M`` needs ``k <= 2 / max diag``.  Accuracy is
    measured on the scalar amplification factor over the spectral interval
    ``[lam_lo, lam_hi]``, relative to ``exp(-lam_lo t)`` (the norm of the
    exact semigroup).  Both sides are scaled by ``exp(lam_lo t)`` before
    comparison so nothing underflows for long times.
    """
    lam = np.geomspace(lam_lo, max(lam_hi, lam_lo * (1 + 1e-12)), 4096)
    exact = np.exp(-(lam - lam_lo) * t)
    target = 0.5 * rtol

    def err(m):
        z = lam * (t / m)
        r = (1 - z / 2) / (1 + z / 2)
        with np.errstate(divide="ignore"):
            mag = np.exp(m * np.log(np.abs(r)) + lam_lo * t)
        approx = np.where((r < 0) & (m % 2 == 1), -mag, mag)
        return np.max(np.abs(approx - exact))

    m = max(1, math.ceil(t * dmax / 2))
    if err(m) <= target:
        return m
    lo, hi = m, 2 * m
    while err(hi) > target:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if err(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _sparse_matrix(op: EllipticOperator) -> sp.csr_matrix:
    n = op.grid.points
    mats = [sp.diags([lo, d, up], [-1, 0, 1], format="csr") for lo, d, up in op.stencils]
    eye = sp.identity(n, format="csr")
    if op.grid.dimension == 1:
        K = mats[0]
    else:
        K = sp.kron(mats[0], eye) + sp.kron(eye, mats[1])
    return (sp.identity(op.size, format="csr") + K).tocsr()


class _ImplicitSolver:
    """Factorisation of ``I + c M`` reused across sub-steps."""

    def __init__(self, op: EllipticOperator, c: float):
        if op.grid.dimension == 1:
            lo, d, up = op.stencils[0]
            dl, dd, du, du2, ipiv, info = lapack.dgttrf(c * lo, 1 + c + c * d, c * up)
            if info != 0:
                raise np.linalg.LinAlgError("tridiagonal factorisation failed")
            self._lu = (dl, dd, du, du2, ipiv)
            self._splu = None
        else:
            A = sp.identity(op.size, format="csc") + c * op.matrix().tocsc()
            self._splu = splu(A.tocsc())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve for ``rhs`` of shape (n, k)."""
        if self._splu is not None:
            return self._splu.solve(rhs)
        x, info = lapack.dgttrs(*self._lu, rhs)
        if info != 0:
            raise np.linalg.LinAlgError("tridiagonal solve failed")
        return x


def build_operator(grid: SpatialGrid, params: ModelParams) -> EllipticOperator:
    return EllipticOperator(grid, params.epsilon, params.a)


def apply_rows(f: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``f @ P`` computed one row at a time.

    A stacked product runs the same kernel on every row, so a trajectory's
    result does not depend on how many others share its batch (a single
    matrix product lets BLAS pick different blockings for different shapes).
    """
    f = np.asarray(f, dtype=float)
    return np.matmul(f[..., None, :], P)[..., 0, :]


def _squared_propagator(op: EllipticOperator, t: float) -> np.ndarray:
    """``C^m`` in row-action form, ``C`` the Crank-Nicolson step, by repeated squaring."""
    m = op.substeps(t)
    k = t / m
    M = op.dense()
    eye = np.eye(op.size)
    C = np.linalg.solve(eye + (k / 2) * M, eye - (k / 2) * M)
    return np.ascontiguousarray(np.linalg.matrix_power(C, m).T)


def apply_semigroup(op: EllipticOperator, t: float, f: np.ndarray) -> np.ndarray:
    """``exp(-t M) f`` by sub-stepped Crank-Nicolson along the last axis of ``f``.

    The sub-step satisfies ``k <= 2 / max diag(M)``, so each step maps
    non-negative data to non-negative data and is a sup-norm contraction.
    On small grids the ``m``-fold product of the step matrix is formed by
    repeated squaring; otherwise the steps are applied one by one through a
    factorised implicit solve.
    """
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    f = np.asarray(f, dtype=float)
    if t == 0:
        return f.copy()
    if op.size <= DENSE_SQUARING_MAX:
        P = op.propagator(t) if float(t) in op._propagators \
            else _squared_propagator(op, float(t))
        return apply_rows(f, P)
    m = op.substeps(t)
    k = t / m
    solver = _ImplicitSolver(op, k / 2)
    shape = f.shape
    u = f.reshape(-1, op.size)
    for _ in range(m):
        rhs = u - (k / 2) * op.apply(u)
        u = np.ascontiguousarray(solver.solve(np.asfortranarray(rhs.T)).T)
    return u.reshape(shape)


def sup_norm_contraction_check(op: EllipticOperator, t: float, f: np.ndarray) -> bool:
    """Whether ``||S(t) f||_C <= ||f||_C`` (with 1e-12 slack)."""
    out = apply_semigroup(op, t, f)
    return bool(np.max(np.abs(out)) <= np.max(np.abs(f)) + 1e-12)
