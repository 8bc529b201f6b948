"""Seeded Brownian paths, bridge refinement, running suprema and barrier times.

Every trajectory draws from its own counter-based stream (Philox) keyed by
``(master_seed, index)``, so ensembles are reproducible under any schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

SeedKey = tuple[int, ...]


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _frozen(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BrownianPath:
    """Sampled Brownian trajectory with ``B(0) = 0``."""

    times: np.ndarray
    values: np.ndarray
    seed: SeedKey | None = None
    running_sup: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t, b = _frozen(self.times), _frozen(self.values)
        if t.shape != b.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("times and values must be matching 1-D arrays")
        if t[0] != 0 or b[0] != 0:
            raise ValueError("path must start at B(0) = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", b)
        object.__setattr__(self, "running_sup", _frozen(np.maximum.accumulate(np.abs(b))))

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def at(self, t: np.ndarray | float) -> np.ndarray:
        """Piecewise-linear evaluation between sampled nodes."""
        if np.any(np.asarray(t) > self.horizon * (1 + 1e-12)):
            raise ValueError("time beyond the sampled horizon")
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class StoppingTime:
    """First sampled time with ``|B| >= K``; ``tau is None`` when not reached."""

    K: float
    tau: float | None
    index: int | None = None

    @property
    def reached(self) -> bool:
        return self.tau is not None

    def __str__(self) -> str:
        return "not-reached" if self.tau is None else repr(self.tau)


def brownian_increments(horizon: float, steps: int, master_seed: int,
                        indices: Sequence[int]) -> np.ndarray:
    """Increments of shape ``(len(indices), steps)``, one stream per index."""
    if horizon <= 0 or steps < 1:
        raise ValueError("need horizon > 0 and steps >= 1")
    sd = math.sqrt(horizon / steps)
    out = np.empty((len(indices), steps))
    for row, i in enumerate(indices):
        out[row] = stream(master_seed, i).standard_normal(steps) * sd
    return out


def generate_path(horizon: float, steps: int, seed: int, index: int = 0) -> BrownianPath:
    """Brownian path on the uniform grid ``linspace(0, horizon, steps + 1)``."""
    dB = brownian_increments(horizon, steps, seed, [index])[0]
    values = np.concatenate([[0.0], np.cumsum(dB)])
    return BrownianPath(np.linspace(0.0, horizon, steps + 1), values, (int(seed), int(index)))


def bridge_fill(left: np.ndarray, right: np.ndarray, dt: float, factor: int,
                rng: np.random.Generator) -> np.ndarray:
    """Interior points of Brownian bridges between ``left`` and ``right``.

    Each of the ``len(left)`` intervals of length ``dt`` is cut into ``factor``
    equal pieces; returns shape ``(len(left), factor - 1)``.  Points are drawn
    sequentially from the exact conditional law given the previous point and
    the right endpoint.
    """
    h = dt / factor
    left = np.asarray(left, dtype=float)
    out = np.empty(left.shape + (factor - 1,))
    prev = left
    for i in range(1, factor):
        rem = factor - i + 1
        mean = prev + (right - prev) / rem
        sd = math.sqrt(h * (rem - 1) / rem)
        prev = mean + sd * rng.standard_normal(left.shape)
        out[..., i - 1] = prev
    return out


def refine_path(path: BrownianPath, factor: int, seed: int | None = None) -> BrownianPath:
    """Insert ``factor - 1`` bridge-sampled points into every interval.

    Coarse values are carried over bit-for-bit.  The randomness comes from a
    stream derived from the path's own seed and the refinement level unless
    ``seed`` is given.
    """
    if factor < 2:
        raise ValueError("refinement factor must be >= 2")
    if seed is not None:
        key: SeedKey = (int(seed),)
    elif path.seed is not None:
        key = path.seed + (path.steps, factor)
    else:
        raise ValueError("path carries no seed; pass one explicitly")
    rng = stream(key[0], *key[1:])
    t, b = path.times, path.values
    dts = np.diff(t)
    n = path.steps
    fine_t = np.empty(n * factor + 1)
    fine_b = np.empty(n * factor + 1)
    fine_t[::factor] = t
    fine_b[::factor] = b
    frac = np.arange(1, factor) / factor
    fine_t_inner = t[:-1, None] + dts[:, None] * frac
    if np.allclose(dts, dts[0], rtol=1e-12, atol=0):
        inner = bridge_fill(b[:-1], b[1:], float(dts[0]), factor, rng)
    else:
        inner = np.stack([bridge_fill(b[j:j + 1], b[j + 1:j + 2], float(dts[j]), factor, rng)[0]
                          for j in range(n)])
    mask = np.ones(n * factor + 1, dtype=bool)
    mask[::factor] = False
    fine_t[mask] = fine_t_inner.ravel()
    fine_b[mask] = inner.ravel()
    return BrownianPath(fine_t, fine_b, key)


def first_passage_index(sup: np.ndarray, K: float) -> np.ndarray:
    """Index of the first sample with ``running_sup >= K`` along the last axis, or -1."""
    hit = np.asarray(sup) >= K
    idx = np.argmax(hit, axis=-1)
    return np.where(hit.any(axis=-1), idx, -1)


def first_passage(path: BrownianPath, K: float) -> StoppingTime:
    """First sampled time at which ``|B|`` reaches ``K`` (no sub-grid correction)."""
    if K <= 0:
        raise ValueError("barrier K must be positive")
    j = int(first_passage_index(path.running_sup, K))
    idx = path.seed[1] if path.seed is not None and len(path.seed) > 1 else None
    return StoppingTime(float(K), None if j < 0 else float(path.times[j]), idx)


def sup_abs_batch(horizon: float, steps: int, master_seed: int, indices: Sequence[int],
                  refine: int = 1) -> np.ndarray:
    """``B*_horizon`` for each index, optionally on a bridge-refined grid."""
    out = np.empty(len(indices))
    for row, i in enumerate(indices):
        path = generate_path(horizon, steps, master_seed, i)
        if refine > 1:
            path = refine_path(path, refine)
        out[row] = path.running_sup[-1]
    return out


def estimate_bad_set_probability(K: float, horizon: float, n_paths: int, seed: int,
                                 steps: int = 1000, refine: int = 1) -> float:
    """Empirical frequency of ``B*_horizon >= K`` over ``n_paths`` paths."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sup = np.empty(n_paths)
    for start in range(0, n_paths, 1000):
        idx = range(start, min(start + 1000, n_paths))
        if refine > 1:
            sup[idx.start:idx.stop] = sup_abs_batch(horizon, steps, seed, idx, refine)
        else:
            dB = brownian_increments(horizon, steps, seed, idx)
            sup[idx.start:idx.stop] = np.max(np.abs(np.cumsum(dB, axis=1)), axis=1)
    return float(np.mean(sup >= K))


def prob_sup_exceeds(K: float, t: float) -> float:
    """``P(sup_{u<=t} B_u >= K) = 2 (1 - Phi(K / sqrt t))`` (one-sided reflection)."""
    return float(2 * (1 - ndtr(K / math.sqrt(t))))


def prob_sup_abs_exceeds(K: float, t: float, terms: int = 50) -> float:
    """``P(sup_{u<=t} |B_u| >= K)`` by repeated reflection across both barriers.

    ``P(B*_t < K) = sum_k (-1)^k [Phi((2k+1)x) - Phi((2k-1)x)]`` summed over all
    integers ``k`` with ``x = K / sqrt t``.
    """
    x = K / math.sqrt(t)
    k = np.arange(-terms, terms + 1)
    inside = np.sum((-1.0) ** k * (ndtr((2 * k + 1) * x) - ndtr((2 * k - 1) * x)))
    return float(1 - inside)
