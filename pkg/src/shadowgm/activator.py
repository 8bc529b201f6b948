"""Activator dynamics: IMEX stepping, the Duhamel form and Picard iteration.

Fields are arrays whose last axis runs over grid nodes; leading axes are
independent trajectories.  The Picard solver works in the tau = eta = 1
normalisation, where the inhibitor's mild form is

    gamma(t) = R(t, B_t) gamma0 + ∫_0^t R(t-u, B_t - B_u) Abar_r(u) / gamma^s(u) du,
    R(t, x)  = exp(-3t/2 + x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brownian import BrownianPath, first_passage
from .model import ModelParams, check_field, mean_power
from .robin import DENSE_PROPAGATOR_MAX, EllipticOperator, apply_rows, apply_semigroup

BLOW_UP_THRESHOLD = 1e6


class BlowUpError(ArithmeticError):
    """Sup-norm of the activator exceeded the blow-up threshold."""


class NonContractionError(RuntimeError):
    """Picard distances stopped decaying; the window is too long."""

    def __init__(self, message: str, distances):
        super().__init__(message)
        self.distances = list(distances)


def reaction_term(field, gamma, params: ModelParams) -> np.ndarray:
    """Pointwise ``A^p / (gamma^q + b)``; ``gamma`` broadcasts over leading axes."""
    A = np.asarray(field, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive")
    return A ** params.p / (gamma[..., None] ** params.q + params.b)


def _propagate(op: EllipticOperator, dt: float, f: np.ndarray) -> np.ndarray:
    if op.size <= DENSE_PROPAGATOR_MAX:
        out = apply_rows(f, op.propagator(dt))
    else:
        out = apply_semigroup(op, dt, f)
    # round-off in the factorised solves can leave -1e-20 where zero is exact
    return np.maximum(out, 0.0)


def imex_step(field, gamma, dt: float, op: EllipticOperator, params: ModelParams,
              blow_up_threshold: float | None = BLOW_UP_THRESHOLD) -> np.ndarray:
    """``A' = S(dt) (A + dt * A^p / (gamma^q + b))``.

    Explicit reaction followed by the exact-in-time linear part; both stages
    preserve non-negativity.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    A = check_field(field)
    out = _propagate(op, dt, A + dt * reaction_term(A, gamma, params))
    if blow_up_threshold is not None and np.max(out) > blow_up_threshold:
        raise BlowUpError(f"sup-norm {np.max(out):.3g} exceeds {blow_up_threshold:.3g}")
    return out


def _mild_history(A0: np.ndarray, sources: np.ndarray, dt: float,
                  op: EllipticOperator) -> np.ndarray:
    """All nodes of ``S(t_n) A0 + sum_{j<n} dt S(t_n - t_j) g_j`` by one forward sweep."""
    out = np.empty((sources.shape[0] + 1,) + A0.shape)
    out[0] = A0
    for j in range(sources.shape[0]):
        out[j + 1] = _propagate(op, dt, out[j] + dt * sources[j])
    return out


def mild_convolution(A0, source_history, t: float, op: EllipticOperator) -> np.ndarray:
    """Duhamel formula ``S(t) A0 + ∫_0^t S(t-u) g(u) du``.

    ``source_history`` holds ``g`` at the nodes ``linspace(0, t, m + 1)``; the
    integral uses the left-endpoint rectangle rule, so the final node is
    ignored.
    """
    A0 = np.asarray(A0, dtype=float)
    g = np.asarray(source_history, dtype=float)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return A0.copy()
    m = g.shape[0] - 1
    if m < 1:
        raise ValueError("source history needs at least two nodes")
    return _mild_history(A0, g[:-1], t / m, op)[-1]


@dataclass(frozen=True)
class PicardWindow:
    L: float
    K: float
    T1: float
    T2: float
    T_hat: float
    contraction_ratio_target: float = 0.5


def picard_window(A0, gamma0: float, K: float, params: ModelParams,
                  safety_factor: float = 1.01) -> PicardWindow:
    """Ball radius ``L`` and the candidate window lengths ``T1, T2, T_hat``.

    ``L = safety * (2 + ||A0||_C + e^K gamma0)``, ``T1 = b L^-p`` and
    ``T2 = exp(-3s/2 - K s - 2K) L^-p``.
    """
    if K < 0:
        raise ValueError("barrier K must be non-negative")
    if safety_factor <= 1:
        raise ValueError("safety factor must exceed 1 (the radius bound is strict)")
    P = params
    L = safety_factor * (2 + float(np.max(np.abs(A0))) + math.exp(K) * gamma0)
    T1 = P.b * L ** (-P.p)
    T2 = math.exp(-1.5 * P.s - K * P.s - 2 * K) * L ** (-P.p)
    return PicardWindow(L, float(K), T1, T2, min(T1, T2))


@dataclass
class PicardResult:
    times: np.ndarray
    A: np.ndarray
    gamma: np.ndarray
    iterations: int
    distances: list[float]

    @property
    def ratios(self) -> np.ndarray:
        d = np.asarray(self.distances)
        return d[1:] / d[:-1]


def picard_maps(A_hist, gamma_hist, times, B, op: EllipticOperator,
                params: ModelParams):
    """One application of ``(F1, F2)`` to histories sampled at ``times``.

    ``B`` holds the Brownian path at ``times``.  Both convolution integrals use
    the trapezoid rule on the (uniform) history grid, so that over one cell
    ``S(dt) (A_j + dt/2 g_j) + dt/2 g_(j+1)`` and
    ``R_j (gamma_j + dt/2 f_j) + dt/2 f_(j+1)``.
    """
    dt = float(times[1] - times[0])
    A_hist = np.asarray(A_hist, dtype=float)
    gamma_hist = np.asarray(gamma_hist, dtype=float)
    g1 = reaction_term(A_hist, gamma_hist, params)
    A_new = np.empty_like(A_hist)
    A_new[0] = A_hist[0]
    for j in range(len(times) - 1):
        A_new[j + 1] = _propagate(op, dt, A_new[j] + 0.5 * dt * g1[j]) + 0.5 * dt * g1[j + 1]
    f = mean_power(A_hist, op.grid, params.r) * gamma_hist ** (-params.s)
    R = np.exp(-1.5 * dt + np.diff(B))
    g_new = np.empty_like(gamma_hist)
    g_new[0] = gamma_hist[0]
    for j in range(len(times) - 1):
        g_new[j + 1] = R[j] * (g_new[j] + 0.5 * dt * f[j]) + 0.5 * dt * f[j + 1]
    return A_new, g_new


def picard_distance(A1, g1, A2, g2) -> float:
    """``sup_t ||A1 - A2||_C + sup_t |g1 - g2|``."""
    return float(np.max(np.abs(A1 - A2)) + np.max(np.abs(g1 - g2)))


def picard_solve(A0, gamma0: float, path: BrownianPath, window: PicardWindow,
                 params: ModelParams, op: EllipticOperator, tol: float = 1e-6,
                 max_iterations: int = 200, history_nodes: int = 256) -> PicardResult:
    """Fixed point of ``(F1, F2)`` on ``[0, T_hat ∧ tau_K]``.

    Iterates from the constant-in-time pair ``(A0, gamma0)`` until the
    successive distance drops below ``tol``.  Raises
    :class:`NonContractionError` if the distance fails to decrease three
    iterations in a row.
    """
    if not params.normalized:
        raise ValueError("Picard iteration is implemented for tau = eta = 1")
    A0 = check_field(A0, op.grid)
    T_end = window.T_hat
    if window.K > 0:
        hit = first_passage(path, window.K)
        if hit.reached:
            T_end = min(T_end, hit.tau)
    if not T_end > 0:
        raise ValueError("empty Picard window")
    times = np.linspace(0.0, T_end, history_nodes + 1)
    B = path.at(times)
    A = np.broadcast_to(A0, (history_nodes + 1,) + A0.shape).copy()
    g = np.full(history_nodes + 1, float(gamma0))
    distances: list[float] = []
    rising = 0
    for it in range(1, max_iterations + 1):
        A_new, g_new = picard_maps(A, g, times, B, op, params)
        d = picard_distance(A_new, g_new, A, g)
        if not math.isfinite(d):
            raise NonContractionError("Picard iterates diverged", distances + [d])
        if distances and d >= distances[-1]:
            rising += 1
            if rising >= 3:
                raise NonContractionError(
                    f"distance grew for 3 iterations (last {d:.3g})", distances + [d])
        else:
            rising = 0
        distances.append(d)
        A, g = A_new, g_new
        if d < tol:
            return PicardResult(times, A, g, it, distances)
    raise NonContractionError(f"no convergence in {max_iterations} iterations", distances)
