"""Model parameters, regime predicates, spatial grids and spatial means."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Exponents and physical constants of the stochastic shadow system.

    ``A_t = eps^2 ΔA - A + A^p / (gamma^q + b)`` on D with
    ``eps dA/dnu + a A = 0`` on the boundary, and
    ``tau dgamma = (-gamma + mean(A^r) / gamma^s) dt + sqrt(eta) gamma dB``.
    """

    p: float
    q: float
    r: float
    s: float
    epsilon: float = 0.1
    tau: float = 1.0
    a: float = 0.0
    b: float = 1.0
    eta: float = 1.0

    @property
    def normalized(self) -> bool:
        """True when tau = eta = 1, the convention of the closed-form integrators."""
        return self.tau == 1.0 and self.eta == 1.0


class ValidationResult(NamedTuple):
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


class RegimeCheck(NamedTuple):
    holds: bool
    margin: float


def validate_params(params: ModelParams) -> ValidationResult:
    """Check every parameter inequality; violations are returned, not raised."""
    P = params
    checks = [
        ("p > 1", P.p > 1),
        ("q > 0", P.q > 0),
        ("r > 0", P.r > 0),
        ("s >= 0", P.s >= 0),
        ("epsilon > 0", P.epsilon > 0),
        ("tau > 0", P.tau > 0),
        ("b > 0", P.b > 0),
        ("a >= 0", P.a >= 0),
        ("eta >= 0", P.eta >= 0),
        ("(p-1)(s+1) < q*r", (P.p - 1) * (P.s + 1) < P.q * P.r),
    ]
    bad = tuple(name for name, good in checks if not good)
    return ValidationResult(not bad, bad)


def check_global_regime(params: ModelParams, dimension: int) -> RegimeCheck:
    """Global-existence condition ``(p-1)/r < min(2/(N+2), q/(s+1))``.

    Returns the verdict and the margin ``min(...) - (p-1)/r``.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    kappa = (params.p - 1) / params.r
    cap = min(2.0 / (dimension + 2), params.q / (params.s + 1))
    margin = cap - kappa
    return RegimeCheck(margin > 0, margin)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform node grid on the box ``[0, L_1] x ... x [0, L_N]`` (N = 1 or 2).

    Fields on the grid are flat arrays of length ``size`` (C order for N = 2),
    optionally with leading batch axes.
    """

    dimension: int
    lengths: tuple[float, ...]
    points: int
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        lengths = tuple(float(x) for x in np.broadcast_to(self.lengths, (self.dimension,)))
        object.__setattr__(self, "lengths", lengths)
        if self.points < 3:
            raise ValueError("need at least 3 nodes per axis")
        if any(length <= 0 for length in lengths):
            raise ValueError("lengths must be positive")
        w1 = [self._axis_weights(h) for h in self.spacing]
        w = w1[0] if self.dimension == 1 else np.outer(w1[0], w1[1]).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def line(cls, length: float = 1.0, points: int = 64) -> "SpatialGrid":
        return cls(1, (length,), points)

    @classmethod
    def box(cls, lengths=(1.0, 1.0), points: int = 32) -> "SpatialGrid":
        return cls(2, tuple(lengths), points)

    def _axis_weights(self, h: float) -> np.ndarray:
        w = np.full(self.points, h)
        w[0] = w[-1] = h / 2
        return w

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (self.points - 1) for L in self.lengths)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points ** self.dimension

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, L, self.points) for L in self.lengths]

    def coordinates(self) -> list[np.ndarray]:
        """Flattened node coordinates, one array per axis."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return [m.ravel() for m in mesh]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Composite trapezoid rule over D along the last axis.

        A row-wise reduction rather than a BLAS product, so each row's result
        does not depend on how many rows are stacked with it.
        """
        return np.sum(np.asarray(values) * self.weights, axis=-1)

    def mean(self, values: np.ndarray) -> np.ndarray:
        return self.integrate(values) / self.measure


@dataclass(frozen=True)
class InhibitorState:
    gamma: float
    s: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def y(self) -> float:
        return self.gamma ** (self.s + 1)

    @classmethod
    def from_y(cls, y: float, s: float) -> "InhibitorState":
        return cls(y ** (1.0 / (s + 1)), s)


def check_field(field: np.ndarray, grid: SpatialGrid | None = None) -> np.ndarray:
    """Return ``field`` as a float array after checking non-negativity."""
    A = np.asarray(field, dtype=float)
    if grid is not None and A.shape[-1] != grid.size:
        raise ValueError(f"field has {A.shape[-1]} nodes, grid has {grid.size}")
    if np.any(A < 0):
        raise ValueError("activator field has negative entries")
    return A


def mean_power(field: np.ndarray, grid: SpatialGrid, exponent: float) -> np.ndarray | float:
    """Spatial mean ``(1/|D|) ∫_D A^exponent dx`` by the trapezoid rule."""
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    A = check_field(field, grid)
    out = grid.mean(A ** exponent)
    return float(out) if np.ndim(out) == 0 else out


def cosine_profile(grid: SpatialGrid, amplitude: float = 2.0) -> np.ndarray:
    """``1 + cos(pi x / L)`` per axis, scaled so that its maximum is ``amplitude``."""
    prof = np.ones(grid.size)
    for x, L in zip(grid.coordinates(), grid.lengths):
        prof = prof * (1 + np.cos(np.pi * x / L)) / 2
    return amplitude * prof
