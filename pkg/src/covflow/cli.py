"""Command-line interface: config-driven runs with CSV/JSON reports.

Exit codes: 0 on pass, 2 on a failed numerical assertion, 1 on config or
usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import carleman as carleman_mod
from .evolve import EvolveError, FlowParams, PotentialSystem, evolve
from .fields import FieldError, hypothesis_report
from .gauge import DEFAULT_NODES, GaugeError, cronstrom_potential, cross_identity_check
from .grid import GridError, GridSpec, l2_norm_values
from .monitors import MonitorError, WeightSpec, convexity_check, weighted_H
from .pipeline import (
    ConfigError,
    build_initial,
    build_potential_spec,
    build_scalars,
    config_hash,
    load_config,
    run_pipeline,
    write_carleman_csv,
    write_monitors_csv,
    write_outputs,
    write_trajectory,
)
from .transform import AppellParams, TransformError, appell_norm_identities, appell_residual, default_target_grid

PASS, CHECK_FAILED, USAGE_ERROR = 0, 2, 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _say(args, *items):
    if not args.quiet:
        print(*items)


def _json_dump(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)


def _setup(args):
    cfg = load_config(args.config)
    out = args.out or cfg.out_directory
    os.makedirs(out, exist_ok=True)
    if args.format:
        cfg = type(cfg)(**{**cfg.__dict__, "formats": args.format})
    grid = GridSpec(cfg.dim, cfg.half_width, cfg.n_points)
    return cfg, grid, out


def _cmd_evolve(args) -> int:
    cfg, grid, out = _setup(args)
    from .fields import eval_potential

    spec = build_potential_spec(cfg)
    v1, v2, f_of_t = build_scalars(cfg, grid)
    a_field = None if spec.kind == "zero" else eval_potential(spec, grid)
    system = PotentialSystem(grid, a_field, v1, v2, f_of_t)
    traj = evolve(build_initial(cfg, grid), system, FlowParams(cfg.a, cfg.b, cfg.dt, cfg.t_end, cfg.store_every))
    write_trajectory(out, traj)
    _say(args, f"evolved to t={traj.times[-1]:g}; {len(traj.times)} snapshots in {out}")
    return PASS


def _cmd_gauge(args) -> int:
    cfg, grid, out = _setup(args)
    spec = build_potential_spec(cfg)
    gt = cronstrom_potential(spec, grid, DEFAULT_NODES)
    payload = {
        "config_hash": config_hash(cfg),
        "transversality_defect": gt.transversality_defect,
        "dA_transversality_defect": gt.dA_transversality_defect,
        "quadrature_nodes": gt.quadrature_nodes,
    }
    if spec.kind != "custom":
        payload["cross_identity_defect"] = cross_identity_check(spec, grid, DEFAULT_NODES)
    if cfg.formats in ("json", "both"):
        _json_dump(os.path.join(out, "gauge.json"), payload)
    if cfg.formats in ("csv", "both"):
        with open(os.path.join(out, "gauge.csv"), "w") as fh:
            fh.write("name,value\n")
            for k, v in payload.items():
                fh.write(f"{k},{v}\n")
    _say(args, f"gauge defects: {payload}")
    return PASS


def _cmd_hypotheses(args) -> int:
    cfg, grid, out = _setup(args)
    spec = build_potential_spec(cfg)
    v1, v2, _ = build_scalars(cfg, grid)
    v = np.zeros(grid.dim)
    v[min(cfg.carleman_v_index, grid.dim - 1)] = 1.0
    rep = hypothesis_report(spec, grid, v, v1, v2, cfg.alpha, cfg.beta)
    payload = {
        "config_hash": config_hash(cfg),
        "sup_xtB": rep.sup_xtB,
        "M_A": rep.M_A,
        "transversality_defect": rep.transversality_defect,
        "kernel_defect": rep.kernel_defect,
        "M1": rep.M1,
        "M2": rep.M2,
        "N1": rep.N1,
        "core_excluded_radius": rep.core_excluded_radius,
    }
    if cfg.formats in ("json", "both"):
        _json_dump(os.path.join(out, "hypotheses.json"), payload)
    if cfg.formats in ("csv", "both"):
        with open(os.path.join(out, "hypotheses.csv"), "w") as fh:
            fh.write("name,value\n")
            for k, v_ in payload.items():
                fh.write(f"{k},{v_}\n")
    _say(args, f"hypothesis constants: {payload}")
    return PASS


def _cmd_appell(args) -> int:
    cfg, grid, out = _setup(args)
    from .fields import eval_potential

    spec = build_potential_spec(cfg)
    a_field = None if spec.kind == "zero" else eval_potential(spec, grid)
    v1, v2, f_of_t = build_scalars(cfg, grid)
    system = PotentialSystem(grid, a_field, v1, v2, f_of_t)
    traj = evolve(build_initial(cfg, grid), system, FlowParams(cfg.a, cfg.b, cfg.dt, cfg.t_end, cfg.store_every))
    params = AppellParams(cfg.alpha, cfg.beta, cfg.a, cfg.b)
    target = default_target_grid(grid, params)
    gamma = 0.0
    pairs = appell_norm_identities(traj, params, gamma, 0.5 * cfg.t_end, target,
                                   a_spec=None if spec.kind == "zero" else spec,
                                   rho0=spec.core_radius(grid))
    margin = 2e-3
    times = [x * cfg.t_end for x in (0.25, 0.5, 0.75) if margin < x * cfg.t_end < 1 - margin]
    residual = appell_residual(traj, params, times, target,
                               a_spec=None if spec.kind == "zero" else spec,
                               rho0=spec.core_radius(grid)) if times else None
    payload = {
        "config_hash": config_hash(cfg),
        "residual": residual,
        "identities": [
            {"name": p.name, "lhs": p.lhs, "rhs": p.rhs, "relative_gap": p.relative_gap} for p in pairs
        ],
    }
    if cfg.formats in ("json", "both"):
        _json_dump(os.path.join(out, "appell.json"), payload)
    worst = max(p.relative_gap for p in pairs)
    _say(args, f"appell identities worst gap {worst:.3e}, residual {residual}")
    return PASS if worst <= 1e-6 else CHECK_FAILED


def _cmd_convexity(args) -> int:
    cfg, grid, out = _setup(args)
    from .fields import eval_potential

    spec = build_potential_spec(cfg)
    a_field = None if spec.kind == "zero" else eval_potential(spec, grid)
    v1, v2, f_of_t = build_scalars(cfg, grid)
    system = PotentialSystem(grid, a_field, v1, v2, f_of_t)
    traj = evolve(
        build_initial(cfg, grid), system, FlowParams(cfg.eps_reg, cfg.b, cfg.dt, cfg.t_end, cfg.store_every)
    )
    wspec = WeightSpec("interpolating", alpha=cfg.alpha, beta=cfg.beta, truncation_radius=cfg.trunc_radius)
    report = weighted_H(traj, wspec)
    verdict = convexity_check(report, tol=args.tol)
    if cfg.formats in ("csv", "both"):
        write_monitors_csv(os.path.join(out, "monitors.csv"), report, traj, wspec)
    if cfg.formats in ("json", "both"):
        _json_dump(
            os.path.join(out, "convexity.json"),
            {
                "config_hash": config_hash(cfg),
                "passed": verdict.passed,
                "min_d2_theta": verdict.min_d2_theta,
                "min_d2_logH": verdict.min_d2_logH,
                "interior_samples": verdict.interior_samples,
            },
        )
    _say(args, f"convexity: min d2 theta = {verdict.min_d2_theta:.3e} ({'pass' if verdict.passed else 'FAIL'})")
    return PASS if verdict.passed else CHECK_FAILED


def _cmd_carleman(args) -> int:
    cfg, grid, out = _setup(args)
    spec = build_potential_spec(cfg)
    v = np.zeros(grid.dim)
    v[min(cfg.carleman_v_index, grid.dim - 1)] = 1.0
    v1, v2, _ = build_scalars(cfg, grid)
    hyp = hypothesis_report(spec, grid, v, v1, v2, cfg.alpha, cfg.beta)
    rows = []
    base = carleman_mod.TestFunctionSpec(
        spatial="gaussian_bump",
        width=cfg.carleman_bump_width,
        cutoff_m=cfg.carleman_cutoff_m,
        cutoff_r_time=cfg.carleman_time_rate,
    )
    specs = [base]
    rng = np.random.default_rng(args.seed)
    for i in range(args.n_random):
        center = tuple(rng.uniform(-0.3, 0.3, grid.dim))
        wavevector = tuple(rng.uniform(-1.5, 1.5, grid.dim))
        specs.append(
            carleman_mod.TestFunctionSpec(
                spatial="modulated_bump",
                center=center,
                width=float(rng.uniform(0.6, 1.2) * cfg.carleman_bump_width),
                wavevector=wavevector,
                cutoff_m=cfg.carleman_cutoff_m,
                cutoff_r_time=cfg.carleman_time_rate,
            )
        )
    a_spec = None if spec.kind == "zero" else spec
    for i, tspec in enumerate(specs):
        for row in carleman_mod.sweep(
            grid, tspec, [cfg.carleman_mu], [cfg.carleman_r], cfg.carleman_eps,
            cfg.carleman_v_index, cfg.carleman_n_times, a_spec, hyp.sup_xtB,
        ):
            rows.append(
                carleman_mod.SweepRow(
                    case_id=f"fn{i}_{row.case_id}", mu=row.mu, eps=row.eps, big_r=row.big_r,
                    v_index=row.v_index, sup_xtb=row.sup_xtb, admissible=row.admissible,
                    lhs=row.lhs, rhs=row.rhs, ratio=row.ratio,
                )
            )
    if cfg.formats in ("csv", "both"):
        write_carleman_csv(os.path.join(out, "carleman.csv"), rows)
    if cfg.formats in ("json", "both"):
        _json_dump(
            os.path.join(out, "carleman.json"),
            {"config_hash": config_hash(cfg), "rows": [row.__dict__ for row in rows]},
        )
    worst = max((r.ratio for r in rows if r.admissible), default=0.0)
    _say(args, f"carleman: {len(rows)} cases, worst admissible ratio {worst:.5f}")
    return PASS if worst <= 1.0 + 5e-3 else CHECK_FAILED


def _cmd_pipeline(args) -> int:
    cfg, grid, out = _setup(args)
    report = run_pipeline(cfg)
    write_outputs(cfg, report, out)
    _say(args, f"pipeline {'passed' if report.passed else 'FAILED'}; outputs in {out}")
    for p in report.pairs:
        _say(args, f"  {p.anchor}: ratio={p.ratio:.8f} {'ok' if p.passed else 'FAIL'}")
    return PASS if report.passed else CHECK_FAILED


_COMMANDS = {
    "evolve": _cmd_evolve,
    "gauge": _cmd_gauge,
    "appell": _cmd_appell,
    "convexity": _cmd_convexity,
    "carleman": _cmd_carleman,
    "pipeline": _cmd_pipeline,
    "hypotheses": _cmd_hypotheses,
}


def main(argv=None) -> int:
    parser = _Parser(prog="covflow", description="Covariant-flow simulation and inequality checks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the experiment config file")
        p.add_argument("--out", default=None, help="output directory (default: from config)")
        p.add_argument("--format", choices=["csv", "json", "both"], default=None)
        p.add_argument("--seed", type=int, default=0, help="seed for random test-function suites")
        p.add_argument("--n-random", type=int, default=0, help="extra random test functions (carleman)")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--tol", type=float, default=1e-3, help="convexity tolerance (convexity subcommand)")
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, GridError, FieldError, GaugeError, EvolveError, MonitorError,
            TransformError, carleman_mod.CarlemanError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
