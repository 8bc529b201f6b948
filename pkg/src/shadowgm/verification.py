"""Check suites shared by the command line, the tests and the demos.

The Picard suite draws random admissible instances, solves each on its
window and compares the fixed point with an independent fine-step IMEX run
driven by a bridge refinement of the same Brownian path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .activator import NonContractionError, PicardResult, imex_step, picard_solve, picard_window
from .brownian import BrownianPath, generate_path, refine_path, stream
from .inhibitor import transform_step
from .model import ModelParams, SpatialGrid, mean_power, validate_params
from .robin import build_operator

#: measured ratios may exceed the nominal 0.5 target by this much
RATIO_SLACK = 0.1


@dataclass(frozen=True)
class PicardInstance:
    params: ModelParams
    grid: SpatialGrid
    A0: np.ndarray
    gamma0: float
    K: float


@dataclass
class PicardCase:
    instance: PicardInstance
    T_end: float
    iterations: int
    max_ratio: float
    error: float
    contracted: bool
    message: str = ""

    def passed(self, tol: float, ratio_cap: float = 0.5 + RATIO_SLACK) -> bool:
        return self.contracted and self.max_ratio <= ratio_cap and self.error <= 10 * tol


def random_instance(rng: np.random.Generator, points: int = 32) -> PicardInstance:
    """Admissible 1-D instance with a bumped initial activator."""
    while True:
        params = ModelParams(
            p=rng.uniform(1.5, 3.0), q=rng.uniform(0.5, 4.0), r=rng.uniform(1.0, 6.0),
            s=rng.uniform(0.0, 2.0), epsilon=rng.uniform(0.05, 0.5), a=rng.uniform(0.0, 1.0),
            b=rng.uniform(0.5, 2.0))
        if validate_params(params):
            break
    grid = SpatialGrid.line(1.0, points)
    x = grid.coordinates()[0]
    A0 = rng.uniform(0.2, 1.5) * (1 + np.cos(np.pi * x)) / 2 + rng.uniform(0.0, 0.5)
    return PicardInstance(params, grid, A0, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))


def fine_imex(instance: PicardInstance, path: BrownianPath, t_end: float):
    """IMEX/transform trajectory on the nodes of ``path`` up to ``t_end``."""
    P, op = instance.params, build_operator(instance.grid, instance.params)
    n = int(np.searchsorted(path.times, t_end * (1 + 1e-12), side="right"))
    times = path.times[:n]
    A = np.empty((n, instance.grid.size))
    g = np.empty(n)
    A[0], g[0] = instance.A0, instance.gamma0
    for j in range(n - 1):
        dt = times[j + 1] - times[j]
        m = mean_power(A[j], instance.grid, P.r)
        g[j + 1] = transform_step(g[j], m, dt, path.values[j + 1] - path.values[j], P)
        A[j + 1] = imex_step(A[j], g[j + 1], dt, op, P, blow_up_threshold=None)
    return times, A, g


def _interp_rows(t, times, values):
    """Linear interpolation in time of ``values`` (rows at ``times``)."""
    j = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
    w = ((t - times[j]) / (times[j + 1] - times[j]))
    w = w.reshape(w.shape + (1,) * (values.ndim - 1))
    return (1 - w) * values[j] + w * values[j + 1]


def picard_case(instance: PicardInstance, seed: int, index: int, tol: float = 1e-6,
                history_nodes: int = 256, refine: int = 8, max_iterations: int = 200,
                safety_factor: float = 1.01, window_scale: float = 1.0) -> PicardCase:
    """Solve one instance and measure it against the fine IMEX oracle."""
    P = instance.params
    window = picard_window(instance.A0, instance.gamma0, instance.K, P, safety_factor)
    if window_scale != 1.0:
        window = replace(window, T_hat=window.T_hat * window_scale)
    path = generate_path(window.T_hat, history_nodes, seed, index)
    op = build_operator(instance.grid, P)
    try:
        res: PicardResult = picard_solve(instance.A0, instance.gamma0, path, window, P, op,
                                         tol=tol, max_iterations=max_iterations,
                                         history_nodes=history_nodes)
    except NonContractionError as exc:
        ratios = np.asarray(exc.distances[1:]) / np.asarray(exc.distances[:-1]) \
            if len(exc.distances) > 1 else np.array([math.nan])
        return PicardCase(instance, window.T_hat, len(exc.distances), float(np.max(ratios)),
                          math.nan, False, str(exc))
    T_end = float(res.times[-1])
    fine = refine_path(path, refine)
    times, A, g = fine_imex(instance, fine, T_end)
    A_ref = _interp_rows(res.times, times, A)
    g_ref = _interp_rows(res.times, times, g)
    err = float(np.max(np.abs(res.A - A_ref)) + np.max(np.abs(res.gamma - g_ref)))
    max_ratio = float(np.max(res.ratios)) if len(res.distances) > 1 else 0.0
    return PicardCase(instance, T_end, res.iterations, max_ratio, err, True)


def picard_suite(n_instances: int = 50, seed: int = 0, tol: float = 1e-6, **kwargs):
    """Run :func:`picard_case` on ``n_instances`` random admissible instances."""
    rng = stream(seed, 2 ** 31)
    cases = []
    for i in range(n_instances):
        inst = random_instance(rng)
        cases.append(picard_case(inst, seed, i, tol=tol, **kwargs))
    return cases
