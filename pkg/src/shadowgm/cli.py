"""Command-line entry point: ``shadowgm <command> config.ini [options]``.

Exit codes: 0 success, 2 bound violation, 3 blow-up where global existence
is predicted, 4 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, parse_overrides, read_config, read_model
from .harness import BLOW_UP, COMPLETED, convergence_study, run_ensemble, run_trajectory
from .model import check_global_regime, validate_params
from .verification import PicardInstance, picard_case, picard_suite

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_BLOW_UP = 3
EXIT_CONFIG = 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="INI configuration file")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="override [stochastic] master_seed")
    common.add_argument("--paths", type=int, help="override [stochastic] paths")
    common.add_argument("--workers", type=int, help="override [run] workers")
    common.add_argument("--output-dir", help="override [run] output_dir")

    ap = argparse.ArgumentParser(prog="shadowgm",
                                 description="Stochastic shadow Gierer-Meinhardt simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="one trajectory, full CSV")
    p.add_argument("--index", type=int, help="trajectory index (default [run] trajectory_index)")
    p.add_argument("--csv", help="CSV path (default <output_dir>/trajectory_<index>.csv)")
    sub.add_parser("ensemble", parents=[common], help="aggregate report over many paths")
    sub.add_parser("verify-bounds", parents=[common],
                   help="lower-bound, integrated-bound and boundedness checks")
    p = sub.add_parser("picard-check", parents=[common], help="Picard contraction suite")
    p.add_argument("--instances", type=int, help="random instances (default [run] picard_instances)")
    p = sub.add_parser("convergence", parents=[common], help="strong-order study")
    p.add_argument("--refinements", type=int, help="number of dt levels")
    sub.add_parser("validate", parents=[common], help="parameter and regime check only")
    return ap


def _load(args) -> RunConfig:
    overrides = parse_overrides(args.set)
    if args.paths is not None:
        overrides[("stochastic", "paths")] = str(args.paths)
    if args.workers is not None:
        overrides[("run", "workers")] = str(args.workers)
    if args.output_dir is not None:
        overrides[("run", "output_dir")] = args.output_dir
    for name, key in (("index", ("run", "trajectory_index")),
                      ("refinements", ("run", "refinements")),
                      ("instances", ("run", "picard_instances"))):
        if getattr(args, name, None) is not None:
            overrides[key] = str(getattr(args, name))
    return read_config(args.config, overrides, args.seed)


def _print_values(values: dict):
    for k, v in values.items():
        print(f"{k}={io.format_value(v)}")


def cmd_validate(args) -> int:
    P, dim = read_model(args.config, parse_overrides(args.set))
    res = validate_params(P)
    regime = check_global_regime(P, dim)
    print(f"valid={io.format_value(res.ok)}")
    for v in res.violations:
        print(f"violation={v}")
    print(f"global_regime={io.format_value(regime.holds)}")
    print(f"global_regime_margin={io.format_value(regime.margin)}")
    return EXIT_OK if res.ok else EXIT_CONFIG


def _status_exit(global_regime: bool, blow_up: bool, violation: bool) -> int:
    if global_regime and blow_up:
        return EXIT_BLOW_UP
    return EXIT_VIOLATION if violation else EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    spec = cfg.spec
    rec = run_trajectory(spec, cfg.trajectory_index)
    out = Path(spec.output_dir) / f"trajectory_{cfg.trajectory_index}.csv"
    path = io.write_trajectory_csv(rec, args.csv or out)
    s = rec.summary
    _print_values({"csv": str(path), "status": s.status, "end_time": s.end_time,
                   "stop_time": s.stop_time, "gamma_final": s.gamma_final,
                   "b_sup": s.b_sup, "min_lb_margin": s.min_lb_margin,
                   "lb_violations": s.lb_violations, "lemma32_margin": s.lemma32_margin,
                   "max_h_alpha_beta": s.max_h_alpha_beta})
    K = spec.barrier
    l32_bad = (K is not None and s.status == COMPLETED and s.b_sup < K
               and s.lemma32_margin < 0)
    regime = check_global_regime(spec.model, spec.grid.dimension).holds
    return _status_exit(regime, s.status == BLOW_UP, s.lb_violations > 0 or l32_bad)


def cmd_ensemble(cfg: RunConfig, args) -> int:
    report = run_ensemble(cfg.spec, workers=cfg.workers)
    summary, js = io.write_ensemble_outputs(report, cfg.spec.output_dir)
    _print_values(report.aggregates)
    print(f"summary={summary}")
    print(f"report={js}")
    return _status_exit(report.aggregates["global_regime"], report.aggregates["blow_up_count"] > 0,
                        report.violations)


def cmd_verify_bounds(cfg: RunConfig, args) -> int:
    report = run_ensemble(cfg.spec, workers=cfg.workers)
    io.write_ensemble_outputs(report, cfg.spec.output_dir)
    a = report.aggregates
    checks = [
        ("gamma lower bound", a["lb_violating_paths"] == 0,
         f"{a['lb_violating_paths']} violating paths, min margin {a['lb_min_margin']:.3g}"),
        ("integrated h_delta bound on {B*_T < K}", a["lemma32_violating_paths"] == 0,
         f"{a['lemma32_violating_paths']} of {a['lemma32_restricted_paths']} restricted paths"),
        ("no blow-up", a["blow_up_count"] == 0, f"{a['blow_up_count']} blow-ups"),
        ("finite C(T)", bool(np.isfinite(a["C_T_max"])), f"C(T) max {a['C_T_max']:.6g}"),
    ]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"global_regime={io.format_value(a['global_regime'])}")
    bounded = bool(np.isfinite(a["C_T_max"]))
    return _status_exit(a["global_regime"], a["blow_up_count"] > 0,
                        report.violations or (a["global_regime"] and not bounded))


def cmd_picard_check(cfg: RunConfig, args) -> int:
    spec, pc = cfg.spec, cfg.picard
    kw = dict(tol=pc.tol, history_nodes=pc.history_nodes, max_iterations=pc.max_iterations,
              safety_factor=pc.safety_factor)
    cases = []
    if spec.model.normalized:
        inst = PicardInstance(spec.model, spec.grid, spec.initial.field(spec.grid),
                              spec.initial.gamma0, spec.barrier if spec.barrier else 1.0)
        cases.append(("configured", picard_case(inst, spec.master_seed, 0, **kw)))
    else:
        print("configured model is not in the tau = eta = 1 normalisation; skipped")
    for i, case in enumerate(picard_suite(cfg.picard_instances, seed=spec.master_seed, **kw)):
        cases.append((f"random-{i}", case))
    failures = 0
    for name, c in cases:
        ok = c.passed(pc.tol)
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: T={c.T_end:.4g} iterations={c.iterations} "
              f"max_ratio={c.max_ratio:.3g} error={c.error:.3g}{' ' + c.message if c.message else ''}")
    print(f"cases={len(cases)} failures={failures}")
    return EXIT_VIOLATION if failures else EXIT_OK


def cmd_convergence(cfg: RunConfig, args) -> int:
    rep = convergence_study(cfg.spec, cfg.refinements)
    values = io.order_values(rep)
    io.write_key_values(values, Path(cfg.spec.output_dir) / "convergence.txt")
    _print_values(values)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "verify-bounds": cmd_verify_bounds,
    "picard-check": cmd_picard_check,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        cfg = _load(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
