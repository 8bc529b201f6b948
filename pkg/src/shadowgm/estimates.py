"""A priori functionals along simulated trajectories and their pathwise checks.

Everything here is in the tau = eta = 1 normalisation.  Functionals take
fields of shape ``(..., nodes)`` and inhibitor values of shape ``(...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brownian import BrownianPath
from .model import ModelParams, SpatialGrid, check_field


@dataclass(frozen=True)
class EstimateConfig:
    """Exponents of the monitored functionals.

    ``kappa = (p-1)/r``, ``theta = N kappa / 2`` and ``delta`` solves
    ``q = kappa (s + 1 + delta)``.  ``delta`` is ``None`` when that root is
    not positive (outside the global regime), and the ``h_delta`` monitors are
    then reported as NaN.
    """

    kappa: float
    theta: float
    delta: float | None
    alpha: float = 2.0
    beta: float = 0.0
    ell: float = 2.0
    blow_up_threshold: float = 1e6

    @classmethod
    def from_params(cls, params: ModelParams, dimension: int, **monitor) -> "EstimateConfig":
        kappa = (params.p - 1) / params.r
        theta = dimension * kappa / 2
        delta = params.q / kappa - (params.s + 1)
        cfg = cls(kappa, theta, delta if delta > 0 else None, **monitor)
        if cfg.alpha <= 1 or cfg.beta < 0 or cfg.ell < 1:
            raise ValueError("monitor needs alpha > 1, beta >= 0, ell >= 1")
        return cfg


def _log_integral(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(grid.integrate(values))


def _gamma_power(integral_log, gamma, power):
    """``exp(log ∫... - power log gamma)`` without overflowing intermediates."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive")
    with np.errstate(over="ignore"):
        out = np.exp(integral_log - power * np.log(gamma))
    return float(out) if np.ndim(out) == 0 else out


def compute_h_delta(field, gamma, grid: SpatialGrid, delta: float, params: ModelParams):
    """``∫_D A^r / gamma^(s+1+delta) dx``."""
    A = check_field(field, grid)
    return _gamma_power(_log_integral(A ** params.r, grid), gamma, params.s + 1 + delta)


def compute_h_alpha_beta(field, gamma, grid: SpatialGrid, alpha: float, beta: float):
    """``∫_D A^alpha / gamma^beta dx``."""
    if alpha <= 1 or beta < 0:
        raise ValueError("need alpha > 1 and beta >= 0")
    A = check_field(field, grid)
    return _gamma_power(_log_integral(A ** alpha, grid), gamma, beta)


def compute_v(h_delta_value, kappa: float, theta: float):
    """``h^(kappa/(1-theta)) + h^kappa`` for an L1 value ``h >= 0``."""
    h = np.asarray(h_delta_value, dtype=float)
    if np.any(h < 0):
        raise ValueError("h must be non-negative")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    out = h ** (kappa / (1 - theta)) + h ** kappa
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class FunctionalSeries:
    """Per-time monitor values for one trajectory (columns are 1-D arrays)."""

    times: np.ndarray
    gamma: np.ndarray
    h_delta: np.ndarray
    h_delta_integral: np.ndarray
    h_alpha_beta: np.ndarray
    v: np.ndarray
    g1_norm: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g2_norm: np.ndarray = field(default_factory=lambda: np.zeros(0))
    blow_up: bool = False


def running_integral(times, values) -> np.ndarray:
    """Cumulative trapezoid integral starting at 0."""
    values = np.asarray(values, dtype=float)
    steps = 0.5 * np.diff(times) * (values[1:] + values[:-1])
    return np.concatenate([[0.0], np.cumsum(steps)])


def ito_sup(gamma, dB, delta: float) -> float:
    """``sup_t |∫_0^t gamma^-delta dB|`` by left-point (Itô) sums."""
    gamma = np.asarray(gamma, dtype=float)
    with np.errstate(over="ignore"):
        terms = gamma[:-1] ** (-delta) * np.asarray(dB, dtype=float)
    partial = np.concatenate([[0.0], np.cumsum(terms)])
    return float(np.max(np.abs(partial)))


def integrated_h_delta_bound(t_end: float, delta: float, gamma0: float, K: float,
                             ito_term: float, tau: float = 1.0) -> float:
    """Right-hand side of the integrated ``h_delta`` estimate.

    ``tau/(delta gamma0^delta) + max(0, (delta-3)/2 t_end e^(3 delta/2 + delta K) gamma0^-delta)
    + sup|∫ gamma^-delta dB|``; the middle term is dropped when negative.
    """
    first = tau / (delta * gamma0 ** delta)
    with np.errstate(over="ignore"):
        middle = (delta - 3) / 2 * t_end * np.exp(1.5 * delta + delta * K) * gamma0 ** (-delta)
    return float(first + max(0.0, middle) + ito_term)


def check_integrated_h_delta(series: FunctionalSeries, path: BrownianPath, params: ModelParams,
                             gamma0: float, K: float, t_end: float, delta: float) -> float:
    """Margin ``bound - ∫_0^t_end ∫_D h_delta`` (non-negative when the estimate holds).

    The Itô term is evaluated from ``series.gamma`` and the path sampled at
    ``series.times``.
    """
    upto = series.times <= t_end * (1 + 1e-12)
    times = series.times[upto]
    dB = np.diff(path.at(times))
    ito = ito_sup(series.gamma[upto], dB, delta)
    bound = integrated_h_delta_bound(float(times[-1]), delta, gamma0, K, ito, params.tau)
    return bound - float(series.h_delta_integral[upto][-1])


@dataclass
class BoundednessReport:
    T: float
    max_h_alpha_beta: float
    max_g1: float
    max_g2: float
    finite: bool

    @property
    def bounded(self) -> bool:
        return self.finite


def check_boundedness(series: FunctionalSeries, T: float) -> BoundednessReport:
    """Empirical ``C(T)`` and ``C_ell(T)``: maxima over ``t <= T``."""
    upto = series.times <= T * (1 + 1e-12)

    def peak(col):
        col = np.asarray(col)
        if col.size == 0:
            return math.nan
        sel = col[upto[: col.size]]
        return float(np.max(sel)) if sel.size else math.nan

    hab, g1, g2 = peak(series.h_alpha_beta), peak(series.g1_norm), peak(series.g2_norm)
    finite = not series.blow_up and bool(np.all(np.isfinite([hab, g1, g2])))
    return BoundednessReport(T, hab, g1, g2, finite)


def lp_norm(values, grid: SpatialGrid, ell: float):
    """``(∫_D |f|^ell dx)^(1/ell)`` along the last axis."""
    return grid.integrate(np.abs(values) ** ell) ** (1.0 / ell)
