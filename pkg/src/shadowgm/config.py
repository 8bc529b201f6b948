"""INI configuration files and command-line overrides.

Sections and keys::

    [model]       p q r s epsilon tau a b eta
    [grid]        dimension length(s) points
    [stochastic]  master_seed paths steps barrier_K
    [integrator]  scheme dt max_halvings
    [picard]      tol max_iterations history_nodes safety_factor
    [monitor]     alpha beta ell blow_up_threshold
    [run]         horizon localized output_dir workers block_size
                  initial_profile amplitude gamma0 trajectory_index
                  refinements picard_instances

``barrier_K`` accepts ``inf`` (or ``none``) for an unreachable barrier.  The
horizon defaults to ``steps * dt``; when both ``steps`` and ``horizon`` are
given they must agree.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .harness import InitialData, MonitorConfig, RunSpec
from .model import ModelParams, SpatialGrid

SECTIONS = ("model", "grid", "stochastic", "integrator", "picard", "monitor", "run")

_KNOWN = {
    "model": {"p", "q", "r", "s", "epsilon", "tau", "a", "b", "eta"},
    "grid": {"dimension", "length", "lengths", "points"},
    "stochastic": {"master_seed", "paths", "steps", "barrier_k"},
    "integrator": {"scheme", "dt", "max_halvings"},
    "picard": {"tol", "max_iterations", "history_nodes", "safety_factor"},
    "monitor": {"alpha", "beta", "ell", "blow_up_threshold"},
    "run": {"horizon", "localized", "output_dir", "workers", "block_size", "initial_profile",
            "amplitude", "gamma0", "trajectory_index", "refinements", "picard_instances"},
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-6
    max_iterations: int = 200
    history_nodes: int = 256
    safety_factor: float = 1.01


@dataclass(frozen=True)
class RunConfig:
    spec: RunSpec
    picard: PicardConfig = field(default_factory=PicardConfig)
    workers: int = 1
    trajectory_index: int = 0
    refinements: int = 5
    picard_instances: int = 50


def parse_overrides(items) -> dict[tuple[str, str], str]:
    """``["model.p=2", ...]`` to ``{("model", "p"): "2"}``."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        out[(section.lower(), name.lower())] = value.strip()
    return out


def _load_parser(path, overrides) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    for (section, name), value in (overrides or {}).items():
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    return cp


def read_model(path=None, overrides=None) -> tuple[ModelParams, int]:
    """Only the ``[model]`` section and the grid dimension; parameters are not validated."""
    cp = _load_parser(path, overrides)
    _check_keys(cp)
    try:
        vals = {k: float(v) for k, v in cp["model"].items()} if cp.has_section("model") else {}
        dim = cp.getint("grid", "dimension", fallback=1)
        return ModelParams(**vals), dim
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [model] section: {exc}") from exc


def read_config(path=None, overrides=None, seed: int | None = None) -> RunConfig:
    """Parse the file at ``path`` (optional), apply overrides and build a :class:`RunConfig`."""
    cp = _load_parser(path, overrides)
    if seed is not None:
        if not cp.has_section("stochastic"):
            cp.add_section("stochastic")
        cp.set("stochastic", "master_seed", str(seed))
    return build_config(cp)


def _check_keys(cp: configparser.ConfigParser):
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(cp[section]) - _KNOWN[section]
        if extra:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")


def build_config(cp: configparser.ConfigParser) -> RunConfig:
    _check_keys(cp)

    def get(section, key, conv, default=None):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
        if default is None:
            raise ConfigError(f"missing [{section}] {key}")
        return default

    def boolean(raw):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")

    def barrier(raw):
        low = raw.strip().lower()
        if low in ("inf", "+inf", "infinity", "none", "not-reached"):
            return None
        return float(raw)

    def lengths(raw):
        return tuple(float(x) for x in raw.replace(",", " ").split())

    try:
        model = ModelParams(
            p=get("model", "p", float), q=get("model", "q", float),
            r=get("model", "r", float), s=get("model", "s", float),
            epsilon=get("model", "epsilon", float, 0.1), tau=get("model", "tau", float, 1.0),
            a=get("model", "a", float, 0.0), b=get("model", "b", float, 1.0),
            eta=get("model", "eta", float, 1.0))
        dim = get("grid", "dimension", int, 1)
        key = "lengths" if cp.has_option("grid", "lengths") else "length"
        grid = SpatialGrid(dim, get("grid", key, lengths, (1.0,)), get("grid", "points", int, 64))

        dt = get("integrator", "dt", float)
        steps = get("stochastic", "steps", int, -1)
        horizon = get("run", "horizon", float, -1.0)
        if horizon < 0 and steps < 0:
            raise ConfigError("give [run] horizon or [stochastic] steps")
        if horizon < 0:
            horizon = steps * dt
        elif steps >= 0 and not math.isclose(steps * dt, horizon, rel_tol=1e-9):
            raise ConfigError(f"steps * dt = {steps * dt} disagrees with horizon = {horizon}")

        monitor = MonitorConfig(
            alpha=get("monitor", "alpha", float, 2.0), beta=get("monitor", "beta", float, 0.0),
            ell=get("monitor", "ell", float, 2.0),
            blow_up_threshold=get("monitor", "blow_up_threshold", float, 1e6))
        initial = InitialData(
            profile=get("run", "initial_profile", str, "cosine"),
            amplitude=get("run", "amplitude", float, 2.0),
            gamma0=get("run", "gamma0", float, 1.0))
        spec = RunSpec(
            model=model, grid=grid, horizon=horizon, dt=dt,
            scheme=get("integrator", "scheme", str, "transform"),
            n_paths=get("stochastic", "paths", int, 1),
            master_seed=get("stochastic", "master_seed", int, 0),
            barrier=get("stochastic", "barrier_k", barrier)
            if cp.has_option("stochastic", "barrier_k") else None,
            localized=get("run", "localized", boolean, False),
            monitor=monitor, initial=initial,
            max_halvings=get("integrator", "max_halvings", int, 10),
            block_size=get("run", "block_size", int, 128),
            output_dir=get("run", "output_dir", str, "output"))
        initial.field(grid)
        if not initial.gamma0 > 0:
            raise ConfigError("gamma0 must be positive")
        picard = PicardConfig(
            tol=get("picard", "tol", float, 1e-6),
            max_iterations=get("picard", "max_iterations", int, 200),
            history_nodes=get("picard", "history_nodes", int, 256),
            safety_factor=get("picard", "safety_factor", float, 1.01))
        cfg = RunConfig(spec, picard, workers=get("run", "workers", int, 1),
                        trajectory_index=get("run", "trajectory_index", int, 0),
                        refinements=get("run", "refinements", int, 5),
                        picard_instances=get("run", "picard_instances", int, 50))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def spec_as_config(cfg: RunConfig) -> configparser.ConfigParser:
    """Inverse of :func:`build_config`, for echoing the effective settings."""
    s, P = cfg.spec, cfg.spec.model
    cp = configparser.ConfigParser()
    cp["model"] = {k: repr(getattr(P, k)) for k in ("p", "q", "r", "s", "epsilon", "tau", "a",
                                                     "b", "eta")}
    cp["grid"] = {"dimension": str(s.grid.dimension),
                  "lengths": " ".join(repr(x) for x in s.grid.lengths),
                  "points": str(s.grid.points)}
    cp["stochastic"] = {"master_seed": str(s.master_seed), "paths": str(s.n_paths),
                        "steps": str(s.steps),
                        "barrier_K": "inf" if s.barrier is None else repr(s.barrier)}
    cp["integrator"] = {"scheme": s.scheme, "dt": repr(s.dt), "max_halvings": str(s.max_halvings)}
    cp["picard"] = {k: repr(v) for k, v in vars(cfg.picard).items()}
    cp["monitor"] = {k: repr(v) for k, v in vars(s.monitor).items()}
    cp["run"] = {"horizon": repr(s.horizon), "localized": str(s.localized).lower(),
                 "output_dir": str(s.output_dir), "workers": str(cfg.workers),
                 "block_size": str(s.block_size), "initial_profile": s.initial.profile,
                 "amplitude": repr(s.initial.amplitude), "gamma0": repr(s.initial.gamma0),
                 "trajectory_index": str(cfg.trajectory_index),
                 "refinements": str(cfg.refinements),
                 "picard_instances": str(cfg.picard_instances)}
    return cp
