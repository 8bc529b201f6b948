"""Integrators for ``tau dgamma = (-gamma + Abar_r / gamma^s) dt + sqrt(eta) gamma dB``.

All step functions broadcast over arrays of trajectories.  ``mean_r`` (the
spatial mean of ``A^r``) is frozen over a step.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .model import ModelParams

#: sub-points of the midpoint rule for the inverse stochastic exponential
TRANSFORM_SUBPOINTS = 4


class PositivityError(ArithmeticError):
    """A step produced ``gamma <= 0``; ``mask`` marks the offending entries."""

    def __init__(self, message: str, mask=None):
        super().__init__(message)
        self.mask = mask


def _check_inputs(gamma, mean_r, dt):
    if dt <= 0:
        raise ValueError("dt must be positive")
    gamma = np.asarray(gamma, dtype=float)
    mean_r = np.asarray(mean_r, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive")
    if np.any(mean_r < 0):
        raise ValueError("mean_r must be non-negative")
    return gamma, mean_r


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def drift(gamma, mean_r, params: ModelParams):
    """Deterministic right-hand side ``(-gamma + mean_r / gamma^s) / tau``."""
    return (-gamma + mean_r * gamma ** (-params.s)) / params.tau


def em_step(gamma, mean_r, dt: float, dB, params: ModelParams, check: bool = True):
    """One Euler-Maruyama step.

    Raises :class:`PositivityError` when any result is non-positive; the
    caller is expected to retry with a halved step.
    """
    gamma, mean_r = _check_inputs(gamma, mean_r, dt)
    out = gamma + drift(gamma, mean_r, params) * dt \
        + (np.sqrt(params.eta) / params.tau) * gamma * np.asarray(dB, dtype=float)
    if check and np.any(out <= 0):
        raise PositivityError("Euler-Maruyama step left the positive half-line", out <= 0)
    return _scalar_or_array(out)


def _require_normalized(params: ModelParams):
    if not params.normalized:
        raise ValueError("the transform integrator needs tau = eta = 1")


def transform_step(gamma, mean_r, dt: float, dB, params: ModelParams,
                   subpoints: int = TRANSFORM_SUBPOINTS):
    """Step through the linear SDE of ``Y = gamma^(s+1)`` (tau = eta = 1).

    ``dY = (s+1)(s-2)/2 Y dt + (s+1) Y dB + (s+1) mean_r dt`` has the solution
    ``Y' = Phi(dt) [Y + (s+1) mean_r ∫_0^dt Phi(u)^-1 du]`` with
    ``Phi(u) = exp(-3/2 (s+1) u + (s+1) B(u))``.  Inside the step ``B`` is
    interpolated linearly and the integral uses the midpoint rule.
    The result is positive for any input.
    """
    _require_normalized(params)
    gamma, mean_r = _check_inputs(gamma, mean_r, dt)
    dB = np.asarray(dB, dtype=float)
    k = params.s + 1
    u = (np.arange(subpoints) + 0.5) * (dt / subpoints)
    expo = (-1.5 * k) * dt + k * dB
    inner = np.exp(-np.multiply.outer(-1.5 * k + k * dB / dt, u)).mean(axis=-1) * dt
    y = np.exp(expo) * (gamma ** k + k * mean_r * inner)
    return _scalar_or_array(y ** (1.0 / k))


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def ode_step(gamma, mean_r, dt: float, params: ModelParams, check: bool = True):
    """Classical RK4 step of the noise-free equation (requires eta = 0)."""
    if params.eta != 0:
        raise ValueError("ode_step integrates the deterministic limit; set eta = 0")
    gamma, mean_r = _check_inputs(gamma, mean_r, dt)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = _rk4(lambda g: drift(g, mean_r, params), gamma, dt)
    if check and np.any(~(out > 0)):
        raise PositivityError("RK4 step left the positive half-line", ~(out > 0))
    return _scalar_or_array(out)


def em_step_halving(gamma: float, mean_r: float, dt: float, dB: float, params: ModelParams,
                    rng: np.random.Generator, max_halvings: int = 10) -> float:
    """Euler-Maruyama step that retries non-positive results on halved sub-steps.

    The Brownian increment is split at the midpoint by the exact bridge law,
    drawing from ``rng``; the recursion goes at most ``max_halvings`` levels
    deep before :class:`PositivityError` is raised.
    """

    def advance(g, h, db, depth):
        out = em_step(g, mean_r, h, db, params, check=False)
        if out > 0:
            return out
        if depth == max_halvings:
            raise PositivityError(f"no positive step after {max_halvings} halvings")
        mid = 0.5 * db + np.sqrt(h / 4) * rng.standard_normal()
        g = advance(g, h / 2, mid, depth + 1)
        return advance(g, h / 2, db - mid, depth + 1)

    return float(advance(float(gamma), dt, float(dB), 0))


class GammaBound(NamedTuple):
    pathwise: float | np.ndarray
    sup_form: float | np.ndarray


def gamma_lower_bound(t, b_t, b_sup, gamma0: float) -> GammaBound:
    """Lower bounds for the inhibitor in the tau = eta = 1 normalisation.

    ``pathwise = gamma0 exp(-3t/2 + B_t)`` and
    ``sup_form = gamma0 exp(-3t/2 - B*_t)``, where ``B*`` is the running
    supremum of ``|B|``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    pw = gamma0 * np.exp(-1.5 * t + np.asarray(b_t, dtype=float))
    sf = gamma0 * np.exp(-1.5 * t - np.asarray(b_sup, dtype=float))
    return GammaBound(_scalar_or_array(pw), _scalar_or_array(sf))


def literal_gamma_bound(t, b_abs, gamma0: float, params: ModelParams):
    """General-parameter form ``(eta/tau)^(1/(s+1)) exp(-3t/(2 eta) - |B_t|/sqrt(eta)) gamma0``.

    Reported only; it does not reduce to :func:`gamma_lower_bound` and is
    never asserted.
    """
    P = params
    if P.eta <= 0:
        return _scalar_or_array(np.full(np.shape(t), np.nan))
    pref = (P.eta / P.tau) ** (1.0 / (P.s + 1))
    return _scalar_or_array(
        pref * np.exp(-1.5 * np.asarray(t) / P.eta - np.asarray(b_abs) / np.sqrt(P.eta)) * gamma0
    )


def exact_gbm(t, b_t, gamma0: float, params: ModelParams):
    """Closed form of the source-free equation ``tau dgamma = -gamma dt + sqrt(eta) gamma dB``."""
    P = params
    sigma = np.sqrt(P.eta) / P.tau
    return gamma0 * np.exp((-1.0 / P.tau - 0.5 * sigma ** 2) * np.asarray(t) + sigma * np.asarray(b_t))


SCHEMES = ("em", "transform", "ode")


def step(scheme: str, gamma, mean_r, dt: float, dB, params: ModelParams):
    if scheme == "em":
        return em_step(gamma, mean_r, dt, dB, params)
    if scheme == "transform":
        return transform_step(gamma, mean_r, dt, dB, params)
    if scheme == "ode":
        return ode_step(gamma, mean_r, dt, params)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
