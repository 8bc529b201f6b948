"""Coupled stepping, trajectory and ensemble runs, and strong-order studies.

One coupled step is Lie splitting: the spatial mean of ``A^r`` is taken from
the current field, the inhibitor advances with that mean frozen, and the
activator then advances one IMEX step with the new inhibitor value.

Trajectories are simulated in fixed blocks of consecutive indices.  Each
path draws from its own stream, the block layout depends only on the
:class:`RunSpec`, and reductions are folded in index order, so an ensemble
report does not depend on the number of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .activator import BLOW_UP_THRESHOLD, BlowUpError, _propagate, reaction_term
from .brownian import brownian_increments, generate_path, prob_sup_abs_exceeds, refine_path, stream
from .estimates import EstimateConfig, integrated_h_delta_bound, lp_norm
from .inhibitor import (SCHEMES, PositivityError, em_step, em_step_halving, exact_gbm, ode_step,
                        transform_step)
from .model import (ModelParams, SpatialGrid, check_field, check_global_regime, cosine_profile,
                    validate_params)
from .robin import EllipticOperator, build_operator

COMPLETED = "completed"
BLOW_UP = "blow-up"
POSITIVITY_FAILURE = "positivity-failure"
STOPPED = "stopped-at-tau_K"
STATUSES = (COMPLETED, BLOW_UP, POSITIVITY_FAILURE, STOPPED)
_RUNNING = ""

#: tolerance of the pathwise lower-bound check
LOWER_BOUND_SLACK = 1e-9

COLUMNS = ("t", "gamma", "mean_r", "sup_A", "h_delta", "h_delta_integral", "h_alpha_beta",
           "v", "lb_margin", "lemma32_margin")


class TrajectoryError(RuntimeError):
    """A coupled step failed; carries the terminal status, path index and time."""

    def __init__(self, status: str, index, time, message: str):
        super().__init__(f"trajectory {index} at t={time}: {status} ({message})")
        self.status = status
        self.index = index
        self.time = time


@dataclass(frozen=True)
class MonitorConfig:
    alpha: float = 2.0
    beta: float = 0.0
    ell: float = 2.0
    blow_up_threshold: float = BLOW_UP_THRESHOLD


@dataclass(frozen=True)
class InitialData:
    """``profile`` is ``cosine`` (peak ``amplitude``), ``constant`` or ``zero``."""

    profile: str = "cosine"
    amplitude: float = 2.0
    gamma0: float = 1.0

    def field(self, grid: SpatialGrid) -> np.ndarray:
        if self.profile == "cosine":
            return cosine_profile(grid, self.amplitude)
        if self.profile == "constant":
            return np.full(grid.size, float(self.amplitude))
        if self.profile == "zero":
            return np.zeros(grid.size)
        raise ValueError(f"unknown initial profile {self.profile!r}")


@dataclass(frozen=True)
class RunSpec:
    """Everything that determines a run.  ``barrier=None`` means K = +inf."""

    model: ModelParams
    grid: SpatialGrid
    horizon: float
    dt: float
    scheme: str = "transform"
    n_paths: int = 1
    master_seed: int = 0
    barrier: float | None = None
    localized: bool = False
    monitor: MonitorConfig = MonitorConfig()
    initial: InitialData = InitialData()
    max_halvings: int = 10
    block_size: int = 128
    output_dir: str | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon >= self.dt:
            raise ValueError("horizon must be at least dt")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.barrier is not None and not self.barrier > 0:
            raise ValueError("barrier K must be positive")
        if self.localized and self.barrier is None:
            raise ValueError("localized mode needs a finite barrier K")
        if self.block_size < 1 or self.max_halvings < 0:
            raise ValueError("block_size must be >= 1 and max_halvings >= 0")
        if self.scheme == "transform" and not self.model.normalized:
            raise ValueError("the transform scheme needs tau = eta = 1")
        if self.scheme == "ode" and self.model.eta != 0:
            raise ValueError("the ode scheme needs eta = 0")
        bad = validate_params(self.model)
        if not bad:
            raise ValueError("invalid model: " + ", ".join(bad.violations))
        self.steps  # validates commensurability

    @property
    def steps(self) -> int:
        n = round(self.horizon / self.dt)
        if abs(n * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ValueError("horizon must be an integer multiple of dt")
        return n

    def estimate_config(self) -> EstimateConfig:
        m = self.monitor
        return EstimateConfig.from_params(self.model, self.grid.dimension, alpha=m.alpha,
                                          beta=m.beta, ell=m.ell,
                                          blow_up_threshold=m.blow_up_threshold)


@dataclass
class TrajectorySummary:
    """Per-path reductions kept by ensemble runs."""

    index: int
    status: str
    end_time: float
    stop_time: float | None
    b_sup: float
    gamma_final: float
    min_lb_margin: float
    lb_violations: int
    max_h_alpha_beta: float
    max_g1: float
    max_g2: float
    max_sup_A: float
    h_delta_integral: float
    ito_sup: float
    lemma32_margin: float


@dataclass
class TrajectoryRecord:
    """Per-step monitor rows (``columns``) plus the terminal summary."""

    index: int
    seed: tuple[int, int]
    columns: dict[str, np.ndarray]
    summary: TrajectorySummary
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.summary.status

    @property
    def times(self) -> np.ndarray:
        return self.columns["t"]

    def rows(self):
        cols = [self.columns[c] for c in COLUMNS]
        return zip(*cols)


# ---------------------------------------------------------------- stepping

def coupled_step(field, gamma, dB, dt: float, op: EllipticOperator, params: ModelParams,
                 scheme: str = "transform", splitting: str = "lie",
                 blow_up_threshold: float | None = BLOW_UP_THRESHOLD,
                 rng: np.random.Generator | None = None, max_halvings: int = 10,
                 index=None, t=None):
    """Advance ``(A, gamma)`` by ``dt`` for one trajectory.

    ``splitting="strang"`` (deterministic limit only) wraps the activator step
    between two inhibitor half-steps.  Failures are raised as
    :class:`TrajectoryError`.
    """
    A = check_field(field, op.grid)
    try:
        if splitting == "lie":
            g = _inhibitor_single(scheme, gamma, _mean_r(A, op.grid, params), dt, dB, params,
                                  rng, max_halvings)
            A = _activator(A, g, dt, op, params, blow_up_threshold)
        elif splitting == "strang":
            if params.eta != 0:
                raise ValueError("Strang splitting is only provided for eta = 0")
            g = _inhibitor_single(scheme, gamma, _mean_r(A, op.grid, params), dt / 2, 0.0,
                                  params, rng, max_halvings)
            A = _activator(A, g, dt, op, params, blow_up_threshold)
            g = _inhibitor_single(scheme, g, _mean_r(A, op.grid, params), dt / 2, 0.0,
                                  params, rng, max_halvings)
        else:
            raise ValueError("splitting must be 'lie' or 'strang'")
    except BlowUpError as exc:
        raise TrajectoryError(BLOW_UP, index, t, str(exc)) from exc
    except PositivityError as exc:
        raise TrajectoryError(POSITIVITY_FAILURE, index, t, str(exc)) from exc
    return A, g


def _mean_r(A, grid, params):
    return grid.mean(A ** params.r)


def _inhibitor_single(scheme, gamma, mean_r, dt, dB, params, rng, max_halvings):
    if scheme == "em":
        if rng is None:
            return em_step(gamma, mean_r, dt, dB, params)
        return em_step_halving(gamma, mean_r, dt, dB, params, rng, max_halvings)
    if scheme == "transform":
        return transform_step(gamma, mean_r, dt, dB, params)
    if scheme == "ode":
        return ode_step(gamma, mean_r, dt, params)
    raise ValueError(f"unknown scheme {scheme!r}")


def _activator(A, gamma, dt, op, params, threshold):
    out = _propagate(op, dt, A + dt * reaction_term(A, gamma, params))
    if threshold is not None and not np.max(out) <= threshold:
        raise BlowUpError(f"sup-norm {np.max(out):.3g} exceeds {threshold:.3g}")
    return out


# ---------------------------------------------------------------- blocks

class _Monitors:
    """Running per-path accumulators for one block."""

    def __init__(self, spec: RunSpec, n: int):
        self.spec = spec
        self.cfg = spec.estimate_config()
        self.gamma0 = spec.initial.gamma0
        self.h_prev = np.zeros(n)
        self.h_int = np.zeros(n)
        self.ito = np.zeros(n)
        self.ito_sup = np.zeros(n)
        self.min_lb = np.full(n, np.inf)
        self.lb_viol = np.zeros(n, dtype=int)
        self.max_hab = np.full(n, -np.inf)
        self.max_g1 = np.full(n, -np.inf)
        self.max_g2 = np.full(n, -np.inf)
        self.max_supA = np.full(n, -np.inf)
        self.lemma32 = np.full(n, np.nan)

    def evaluate(self, t, A, gamma, b_sup):
        """Monitor values at time ``t`` for every path of the block."""
        P, grid, cfg = self.spec.model, self.spec.grid, self.cfg
        logg = np.log(gamma)
        Ar = A ** P.r
        mean_r = grid.mean(Ar)
        out = {"t": np.full(gamma.shape, t), "gamma": gamma, "mean_r": mean_r,
               "sup_A": np.max(A, axis=-1)}
        if cfg.delta is not None:
            h = grid.measure * mean_r * np.exp(-(P.s + 1 + cfg.delta) * logg)
            v = h ** (cfg.kappa / (1 - cfg.theta)) + h ** cfg.kappa if 0 < cfg.theta < 1 \
                else np.full(h.shape, np.nan)
        else:
            h = v = np.full(gamma.shape, np.nan)
        out["h_delta"] = h
        out["v"] = v
        out["h_alpha_beta"] = grid.integrate(A ** cfg.alpha) * np.exp(-cfg.beta * logg)
        out["g1"] = lp_norm(reaction_term(A, gamma, P), grid, cfg.ell)
        out["g2"] = lp_norm(Ar * np.exp(-P.s * logg)[:, None], grid, cfg.ell)
        if P.normalized:
            out["lb_margin"] = gamma - self.gamma0 * np.exp(-1.5 * t - b_sup)
        else:
            out["lb_margin"] = np.full(gamma.shape, np.nan)
        return out

    def lemma32_margin(self, t):
        cfg, K = self.cfg, self.spec.barrier
        if cfg.delta is None or K is None:
            return np.full(self.h_int.shape, np.nan)
        bound = integrated_h_delta_bound(t, cfg.delta, self.gamma0, K, 0.0, self.spec.model.tau)
        return bound + self.ito_sup - self.h_int

    def update(self, mask, vals, dt, t):
        """Fold the values at ``t`` into the accumulators for paths in ``mask``."""
        h = vals["h_delta"]
        if dt > 0:
            self.h_int = np.where(mask, self.h_int + 0.5 * dt * (self.h_prev + h), self.h_int)
        self.h_prev = np.where(mask, h, self.h_prev)
        m = np.where(mask, vals["lb_margin"], np.inf)
        self.min_lb = np.fmin(self.min_lb, m)
        self.lb_viol += mask & (vals["lb_margin"] < -LOWER_BOUND_SLACK)
        for name, acc in (("h_alpha_beta", "max_hab"), ("g1", "max_g1"), ("g2", "max_g2"),
                          ("sup_A", "max_supA")):
            cur = getattr(self, acc)
            setattr(self, acc, np.where(mask, np.fmax(cur, vals[name]), cur))
        self.lemma32 = np.where(mask, self.lemma32_margin(t), self.lemma32)
        vals["h_delta_integral"] = self.h_int
        vals["lemma32_margin"] = self.lemma32

    def add_ito(self, mask, gamma, dB):
        delta = self.cfg.delta
        if delta is None:
            return
        self.ito = np.where(mask, self.ito + np.exp(-delta * np.log(gamma)) * dB, self.ito)
        self.ito_sup = np.fmax(self.ito_sup, np.abs(self.ito))


def _inhibitor_batch(spec, indices, step, gamma, mean_r, dt, dB, active):
    """One inhibitor step for every path; returns the new values and a failure mask."""
    P, scheme = spec.model, spec.scheme
    if scheme == "transform":
        out = transform_step(gamma, mean_r, dt, dB, P)
    elif scheme == "ode":
        out = ode_step(gamma, mean_r, dt, P, check=False)
    else:
        out = em_step(gamma, mean_r, dt, dB, P, check=False)
    out = np.atleast_1d(np.asarray(out, dtype=float)).copy()
    fail = active & ~(out > 0)
    if scheme == "em":
        for row in np.flatnonzero(fail):
            rng = stream(spec.master_seed, indices[row], step)
            try:
                out[row] = em_step_halving(gamma[row], mean_r[row], dt, dB[row], P, rng,
                                           spec.max_halvings)
                fail[row] = False
            except PositivityError:
                pass
    return out, fail


def simulate_block(spec: RunSpec, indices, increments: np.ndarray | None = None,
                   record: bool = False):
    """Simulate the paths ``indices`` together.

    ``increments`` (shape ``(len(indices), steps)``) overrides the generated
    Brownian increments; the step is then ``spec.horizon / steps``.  Returns
    the per-path summaries and, when ``record`` is set, the per-step columns
    with shape ``(steps + 1, len(indices))`` (rows after a path stops repeat
    NaN).
    """
    indices = [int(i) for i in indices]
    n = len(indices)
    if increments is None:
        increments = brownian_increments(spec.horizon, spec.steps, spec.master_seed, indices)
    increments = np.asarray(increments, dtype=float)
    steps = increments.shape[1]
    dt = spec.horizon / steps
    P, grid = spec.model, spec.grid
    op = build_operator(grid, P)
    threshold = spec.monitor.blow_up_threshold
    K = spec.barrier

    A = np.tile(check_field(spec.initial.field(grid), grid), (n, 1))
    gamma = np.full(n, float(spec.initial.gamma0))
    if not spec.initial.gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    B = np.zeros(n)
    b_sup = np.zeros(n)
    status = np.array([_RUNNING] * n, dtype=object)
    end_time = np.zeros(n)
    stop_time = [None] * n
    mon = _Monitors(spec, n)

    names = COLUMNS + ("g1", "g2", "B", "b_sup")
    cols = {c: np.full((steps + 1, n), np.nan) for c in names} if record else None

    def fold(mask, t, vals):
        mon.update(mask, vals, dt, t)
        if record:
            vals = dict(vals, B=B, b_sup=b_sup)
            j = int(round(t / dt))
            for c in names:
                cols[c][j] = np.where(mask, vals[c], np.nan)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        everyone = np.ones(n, dtype=bool)
        vals = mon.evaluate(0.0, A, gamma, b_sup)
        mon.update(everyone, vals, 0.0, 0.0)
        if record:
            vals = dict(vals, B=B, b_sup=b_sup)
            for c in names:
                cols[c][0] = vals[c]

        for j in range(steps):
            active = status == _RUNNING
            if not active.any():
                dB = increments[:, j:]
                walk = B[:, None] + np.cumsum(dB, axis=1)
                b_sup = np.maximum(b_sup, np.max(np.abs(walk), axis=1))
                break
            t_next = (j + 1) * dt
            dB = increments[:, j]
            B = B + dB
            b_sup = np.maximum(b_sup, np.abs(B))
            if spec.localized:
                hit = active & (b_sup >= K)
                for row in np.flatnonzero(hit):
                    status[row] = STOPPED
                    stop_time[row] = t_next
                active &= ~hit

            mean_r = grid.mean(A ** P.r)
            g_new, fail = _inhibitor_batch(spec, indices, j + 1, gamma, mean_r, dt, dB, active)
            status[fail] = POSITIVITY_FAILURE
            active &= ~fail
            g_safe = np.where(active, g_new, gamma)
            A_new = _propagate(op, dt, A + dt * reaction_term(A, g_safe, P))
            blown = active & ~(np.max(A_new, axis=-1) <= threshold)
            status[blown] = BLOW_UP

            mon.add_ito(active, gamma, dB)
            A = np.where(active[:, None], A_new, A)
            gamma = np.where(active, g_new, gamma)
            end_time = np.where(active, t_next, end_time)
            fold(active, t_next, mon.evaluate(t_next, A, gamma, b_sup))

    status[status == _RUNNING] = COMPLETED
    summaries = [
        TrajectorySummary(
            index=indices[k], status=str(status[k]), end_time=float(end_time[k]),
            stop_time=stop_time[k], b_sup=float(b_sup[k]), gamma_final=float(gamma[k]),
            min_lb_margin=float(mon.min_lb[k]), lb_violations=int(mon.lb_viol[k]),
            max_h_alpha_beta=float(mon.max_hab[k]), max_g1=float(mon.max_g1[k]),
            max_g2=float(mon.max_g2[k]), max_sup_A=float(mon.max_supA[k]),
            h_delta_integral=float(mon.h_int[k]), ito_sup=float(mon.ito_sup[k]),
            lemma32_margin=float(mon.lemma32[k]))
        for k in range(n)
    ]
    return summaries, cols


def run_trajectory(spec: RunSpec, index: int = 0) -> TrajectoryRecord:
    """Simulate path ``(master_seed, index)`` and keep every monitored row."""
    (summary,), cols = simulate_block(spec, [index], record=True)
    rows = int(round(summary.end_time / spec.dt)) + 1
    columns = {c: cols[c][:rows, 0].copy() for c in COLUMNS}
    extra = {c: cols[c][:rows, 0].copy() for c in ("g1", "g2", "B", "b_sup")}
    return TrajectoryRecord(index, (spec.master_seed, index), columns, summary, extra)


# ---------------------------------------------------------------- ensembles

def _run_block(spec: RunSpec, start: int, stop: int):
    return simulate_block(spec, range(start, stop))[0]


@dataclass
class EnsembleReport:
    aggregates: dict
    trajectories: list[TrajectorySummary]

    @property
    def violations(self) -> bool:
        a = self.aggregates
        return a["lb_violating_paths"] > 0 or a["lemma32_violating_paths"] > 0

    @property
    def unexpected_blow_up(self) -> bool:
        a = self.aggregates
        return a["global_regime"] and a["blow_up_count"] > 0


def _stats(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan, math.nan
    return float(np.min(v)), float(np.median(v)), float(np.max(v))


def aggregate(spec: RunSpec, summaries: list[TrajectorySummary]) -> dict:
    """Ensemble reductions, folded in trajectory-index order."""
    summaries = sorted(summaries, key=lambda s: s.index)
    n = len(summaries)
    K = spec.barrier
    regime = check_global_regime(spec.model, spec.grid.dimension)
    counts = {st: sum(s.status == st for s in summaries) for st in STATUSES}
    b_sup = np.array([s.b_sup for s in summaries])
    lb_viol = [s for s in summaries if s.lb_violations > 0]
    lb_viol_active = [s for s in lb_viol if s.status != STOPPED]
    restricted = [s for s in summaries
                  if K is not None and s.b_sup < K and s.status == COMPLETED]
    l32 = np.array([s.lemma32_margin for s in restricted])
    l32_viol = int(np.sum(l32 < 0))
    ok = [s for s in summaries if s.status in (COMPLETED, STOPPED)]
    c_min, c_med, c_max = _stats([s.max_h_alpha_beta for s in ok])
    agg = {
        "n_paths": n,
        "horizon": spec.horizon,
        "dt": spec.dt,
        "scheme": spec.scheme,
        "master_seed": spec.master_seed,
        "barrier_K": K,
        "localized": spec.localized,
        "global_regime": bool(regime.holds),
        "global_regime_margin": float(regime.margin),
        **{"count_" + st.replace("-", "_"): c for st, c in counts.items()},
        "blow_up_count": counts[BLOW_UP],
        "bad_set_fraction": float(np.mean(b_sup >= K)) if K is not None else 0.0,
        "bad_set_reference": prob_sup_abs_exceeds(K, spec.horizon) if K is not None else 0.0,
        "lb_violating_paths": len(lb_viol),
        "lb_violating_paths_not_stopped": len(lb_viol_active),
        "lb_violation_fraction": len(lb_viol) / n,
        "lb_min_margin": min(s.min_lb_margin for s in summaries),
        "lemma32_restricted_paths": len(restricted),
        "lemma32_violating_paths": l32_viol,
        "lemma32_violation_fraction": l32_viol / len(restricted) if restricted else 0.0,
        "lemma32_min_margin": float(np.min(l32)) if l32.size else math.nan,
        "C_T_min": c_min,
        "C_T_median": c_med,
        "C_T_max": c_max,
        "C_ell_g1_max": _stats([s.max_g1 for s in ok])[2],
        "C_ell_g2_max": _stats([s.max_g2 for s in ok])[2],
        "max_sup_A": _stats([s.max_sup_A for s in summaries])[2],
        "gamma_final_median": _stats([s.gamma_final for s in summaries])[1],
    }
    return agg


def run_ensemble(spec: RunSpec, workers: int = 1) -> EnsembleReport:
    """Run ``spec.n_paths`` trajectories in blocks of ``spec.block_size``."""
    blocks = [(start, min(start + spec.block_size, spec.n_paths))
              for start in range(0, spec.n_paths, spec.block_size)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, [spec] * len(blocks),
                                  [b[0] for b in blocks], [b[1] for b in blocks]))
    else:
        parts = [_run_block(spec, *b) for b in blocks]
    summaries = [s for part in parts for s in part]
    return EnsembleReport(aggregate(spec, summaries), summaries)


# ---------------------------------------------------------------- order study

@dataclass
class OrderReport:
    scheme: str
    reference: str
    dts: np.ndarray
    errors: np.ndarray
    slope: float
    n_paths: int


def _fit_slope(dts, errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if np.any(~(errors > 0)):
        return math.nan
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def convergence_study(spec: RunSpec, refinements: int = 5, n_paths: int | None = None,
                      reference: str = "auto") -> OrderReport:
    """Strong error of ``gamma(T)`` across ``refinements`` successive dt halvings.

    The coarsest level uses ``spec.dt``; finer levels refine the same paths by
    Brownian bridges.  ``reference`` is ``exact`` (closed-form stochastic
    exponential, valid when the activator is identically zero), ``finest``
    (the finest level, excluded from the fit), ``richardson`` (differences of
    successive levels, attributed to the coarser one) or ``auto``.
    """
    if refinements < 3:
        raise ValueError("need at least 3 refinement levels")
    n_paths = spec.n_paths if n_paths is None else n_paths
    if reference == "auto":
        reference = "exact" if spec.initial.profile == "zero" else "finest"
    if reference not in ("exact", "finest", "richardson"):
        raise ValueError("reference must be 'exact', 'finest', 'richardson' or 'auto'")
    steps0 = spec.steps
    levels = [np.empty((n_paths, steps0 * 2 ** lv)) for lv in range(refinements)]
    B_T = np.empty(n_paths)
    for row in range(n_paths):
        path = generate_path(spec.horizon, steps0, spec.master_seed, row)
        for lv in range(refinements):
            if lv:
                path = refine_path(path, 2)
            levels[lv][row] = path.increments
        B_T[row] = path.values[-1]

    finals = []
    for lv, inc in enumerate(levels):
        sums, _ = simulate_block(spec, range(n_paths), increments=inc)
        bad = [s.index for s in sums if s.status != COMPLETED]
        if bad:
            raise TrajectoryError(sums[bad[0]].status, bad[0], None,
                                  f"level {lv} did not complete")
        finals.append(np.array([s.gamma_final for s in sums]))

    dts = spec.dt / 2.0 ** np.arange(refinements)
    if reference == "exact":
        ref = exact_gbm(spec.horizon, B_T, spec.initial.gamma0, spec.model)
        errors = np.array([np.mean(np.abs(f - ref)) for f in finals])
    elif reference == "finest":
        errors = np.array([np.mean(np.abs(f - finals[-1])) for f in finals[:-1]])
        dts = dts[:-1]
    else:
        errors = np.array([np.mean(np.abs(f - g)) for f, g in zip(finals[:-1], finals[1:])])
        dts = dts[:-1]
    return OrderReport(spec.scheme, reference, dts, errors, _fit_slope(dts, errors), n_paths)
