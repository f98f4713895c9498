"""Config-driven experiment pipeline: gauge reduction, regularized evolution,
conformal transform, convexity/gradient monitors, optional weighted-estimate
sweep; CSV/JSON reporting.

Config files are flat INI sections with key = value lines and # comments.
Every module-level precondition is checked at load time with an actionable
message.  Reports are deterministic: fixed key order, %.17g floats.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import carleman as carleman_mod
from .evolve import FlowParams, PotentialSystem, Trajectory, evolve, heat_semigroup
from .fields import PotentialSpec, eval_potential, hypothesis_report, psi_at
from .gauge import DEFAULT_NODES, cronstrom_potential, cross_identity_check, interior_mask, radial_integral
from .grid import (
    GridSpec,
    SampledComplexField,
    l2_norm_values,
    meshes,
    radius_squared,
    wavenumber_multipliers,
)
from .monitors import (
    ConvexityReport,
    WeightSpec,
    convexity_check,
    gradient_bound_check,
    weighted_H,
)
from .transform import AppellParams, appell_forward, appell_map_times, appell_residual, default_target_grid

FLOAT_FMT = "%.17g"
EPS_SCAN = (1e-2, 1e-3, 1e-4)
PAIR_TOLERANCE = 1e-6


class ConfigError(ValueError):
    pass


class PipelineFailure(RuntimeError):
    """A stage check failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 2
    n_points: int = 64
    half_width: float = 8.0
    a: float = 0.0
    b: float = 1.0
    eps_reg: float = 1e-3
    dt: float = 2e-4
    t_end: float = 0.1
    store_every: int = 50
    potential_kind: str = "zero"
    b0: float = 1.0
    rho0: float | None = None
    gauge_tag: str = "bilinear"
    v1_kind: str = "zero"
    v1_value: float = 0.0
    v1_rate: float = 1.0
    v2_kind: str = "zero"
    v2_re: float = 0.0
    v2_im: float = 0.0
    v2_rate: float = 1.0
    f_kind: str = "zero"
    f_amp: float = 0.0
    f_rate: float = 1.0
    initial_kind: str = "gaussian"
    initial_rate: float = 2.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.25
    trunc_radius: float | None = None
    carleman_enabled: bool = False
    carleman_mu: float = 0.5
    carleman_eps: float = 1.0
    carleman_r: float = 8.0
    carleman_v_index: int = 0
    carleman_cutoff_m: float = 3.0
    carleman_bump_width: float = 0.8
    carleman_time_rate: float = 8.0
    carleman_n_times: int = 401
    out_directory: str = "runs/out"
    formats: str = "both"


_SCHEMA = {
    "grid": {"dim": int, "n_points": int, "half_width": float},
    "flow": {"a": float, "b": float, "eps_reg": float, "dt": float, "t_end": float, "store_every": int},
    "potential": {"kind": str, "b0": float, "rho0": float, "gauge_tag": str},
    "scalar": {
        "v1_kind": str, "v1_value": float, "v1_rate": float,
        "v2_kind": str, "v2_re": float, "v2_im": float, "v2_rate": float,
        "f_kind": str, "f_amp": float, "f_rate": float,
    },
    "initial": {"kind": str, "rate": float},
    "weights": {"alpha": float, "beta": float, "gamma": float, "trunc_radius": float},
    "carleman": {
        "enabled": bool, "mu": float, "eps": float, "r_big": float, "v_index": int,
        "cutoff_m": float, "bump_width": float, "time_rate": float, "n_times": int,
    },
    "output": {"directory": str, "formats": str},
}

_FIELD_MAP = {
    ("grid", "dim"): "dim",
    ("grid", "n_points"): "n_points",
    ("grid", "half_width"): "half_width",
    ("flow", "a"): "a",
    ("flow", "b"): "b",
    ("flow", "eps_reg"): "eps_reg",
    ("flow", "dt"): "dt",
    ("flow", "t_end"): "t_end",
    ("flow", "store_every"): "store_every",
    ("potential", "kind"): "potential_kind",
    ("potential", "b0"): "b0",
    ("potential", "rho0"): "rho0",
    ("potential", "gauge_tag"): "gauge_tag",
    ("scalar", "v1_kind"): "v1_kind",
    ("scalar", "v1_value"): "v1_value",
    ("scalar", "v1_rate"): "v1_rate",
    ("scalar", "v2_kind"): "v2_kind",
    ("scalar", "v2_re"): "v2_re",
    ("scalar", "v2_im"): "v2_im",
    ("scalar", "v2_rate"): "v2_rate",
    ("scalar", "f_kind"): "f_kind",
    ("scalar", "f_amp"): "f_amp",
    ("scalar", "f_rate"): "f_rate",
    ("initial", "kind"): "initial_kind",
    ("initial", "rate"): "initial_rate",
    ("weights", "alpha"): "alpha",
    ("weights", "beta"): "beta",
    ("weights", "gamma"): "gamma",
    ("weights", "trunc_radius"): "trunc_radius",
    ("carleman", "enabled"): "carleman_enabled",
    ("carleman", "mu"): "carleman_mu",
    ("carleman", "eps"): "carleman_eps",
    ("carleman", "r_big"): "carleman_r",
    ("carleman", "v_index"): "carleman_v_index",
    ("carleman", "cutoff_m"): "carleman_cutoff_m",
    ("carleman", "bump_width"): "carleman_bump_width",
    ("carleman", "time_rate"): "carleman_time_rate",
    ("carleman", "n_times"): "carleman_n_times",
    ("output", "directory"): "out_directory",
    ("output", "formats"): "formats",
}


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            typ = _SCHEMA[section][key]
            fieldname = _FIELD_MAP[(section, key)]
            raw = raw.strip()
            try:
                if typ is bool:
                    if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                        raise ValueError("expected a boolean")
                    values[fieldname] = raw.lower() in ("true", "1", "yes")
                elif typ is int:
                    values[fieldname] = int(raw)
                elif typ is float:
                    values[fieldname] = None if raw == "" else float(raw)
                else:
                    values[fieldname] = raw
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            val = getattr(cfg, _FIELD_MAP[(section, key)])
            if val is None:
                val = ""
            elif isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = FLOAT_FMT % val
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def validate_config(cfg: ExperimentConfig) -> None:
    try:
        grid = GridSpec(cfg.dim, cfg.half_width, cfg.n_points)
        FlowParams(cfg.a, cfg.b, cfg.dt, cfg.t_end, cfg.store_every)
        spec = build_potential_spec(cfg)
        spec.check_grid(grid)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.eps_reg <= 0:
        raise ConfigError("eps_reg must be positive")
    if cfg.alpha <= 0 or cfg.beta <= 0:
        raise ConfigError("alpha and beta must be positive")
    if cfg.trunc_radius is not None and cfg.trunc_radius <= 0:
        raise ConfigError("trunc_radius must be positive when given")
    if cfg.initial_kind != "gaussian":
        raise ConfigError(f"unknown initial kind {cfg.initial_kind!r}")
    if cfg.initial_rate <= 0:
        raise ConfigError("initial rate must be positive")
    for name in ("v1_kind", "v2_kind", "f_kind"):
        if getattr(cfg, name) not in ("zero", "const", "gaussian"):
            raise ConfigError(f"{name} must be zero, const, or gaussian")
    if cfg.formats not in ("csv", "json", "both"):
        raise ConfigError("formats must be csv, json, or both")


def build_potential_spec(cfg: ExperimentConfig) -> PotentialSpec:
    return PotentialSpec(kind=cfg.potential_kind, b0=cfg.b0, rho0=cfg.rho0, gauge_tag=cfg.gauge_tag)


def build_scalars(cfg: ExperimentConfig, grid: GridSpec):
    """(v1 samples or None, v2(t) callable or None, f(t) callable or None)."""
    r2 = radius_squared(grid)
    v1 = None
    if cfg.v1_kind == "const":
        v1 = cfg.v1_value * np.ones(grid.shape)
    elif cfg.v1_kind == "gaussian":
        v1 = cfg.v1_value * np.exp(-cfg.v1_rate * r2)
    v2 = None
    if cfg.v2_kind != "zero":
        base = (cfg.v2_re + 1j * cfg.v2_im) * (
            np.ones(grid.shape) if cfg.v2_kind == "const" else np.exp(-cfg.v2_rate * r2)
        )
        v2 = lambda t, _b=base: _b
    f_of_t = None
    if cfg.f_kind != "zero":
        fbase = cfg.f_amp * (np.ones(grid.shape) if cfg.f_kind == "const" else np.exp(-cfg.f_rate * r2))
        f_of_t = lambda t, _b=fbase: _b.astype(complex)
    return v1, v2, f_of_t


def build_initial(cfg: ExperimentConfig, grid: GridSpec) -> SampledComplexField:
    return SampledComplexField(grid, np.exp(-cfg.initial_rate * radius_squared(grid)))


@dataclass
class InequalityPair:
    anchor: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool


def _make_pair(anchor: str, lhs: float, rhs: float, tol: float = PAIR_TOLERANCE) -> InequalityPair:
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else float("inf")
    return InequalityPair(anchor=anchor, lhs=lhs, rhs=rhs, ratio=ratio, passed=bool(ratio <= 1.0 + tol))


@dataclass
class PipelineReport:
    config_hash: str
    stages: list
    pairs: list
    defects: dict
    convexity: ConvexityReport | None = None
    gradient_ratio: float | None = None
    carleman_rows: list = field(default_factory=list)
    eps0: float | None = None
    passed: bool = True
    transformed_traj: Trajectory | None = field(default=None, repr=False)
    monitor_weight: WeightSpec | None = field(default=None, repr=False)


def _a_tilde_at(spec: PotentialSpec, pts: np.ndarray, rho0: float, k: int = DEFAULT_NODES) -> np.ndarray:
    """Reduced potential at arbitrary points via the tangential-field ray integral."""
    flat = pts.reshape(-1, pts.shape[-1])
    vals = -radial_integral(lambda q: psi_at(spec, q, rho0), flat, k, rho0)
    return vals.reshape(pts.shape)


def _guard(stage: str, fn, *args, **kwargs):
    """Run one stage operation, rewrapping failures with the stage name."""
    try:
        return fn(*args, **kwargs)
    except PipelineFailure:
        raise
    except Exception as exc:
        raise PipelineFailure(stage, str(exc)) from exc


def run_pipeline(cfg: ExperimentConfig) -> PipelineReport:
    grid = GridSpec(cfg.dim, cfg.half_width, cfg.n_points)
    spec = build_potential_spec(cfg)
    spec.check_grid(grid)
    v1, v2, f_of_t = build_scalars(cfg, grid)
    u0 = build_initial(cfg, grid)
    r2 = radius_squared(grid)
    # optional flat weight continuation past trunc_radius: the energy-method
    # inequalities hold for the truncated weights, and the cap keeps huge
    # exponents from amplifying the spectral noise floor at the box corners
    r2w = r2 if cfg.trunc_radius is None else np.minimum(r2, cfg.trunc_radius ** 2)
    stages: list = []
    defects: dict = {}
    pairs: list = []

    # ----- stage I: gauge reduction -------------------------------------
    gt = _guard("gauge", cronstrom_potential, spec, grid, DEFAULT_NODES)
    defects["transversality"] = gt.transversality_defect
    defects["transversality_of_radial_derivative"] = gt.dA_transversality_defect
    if spec.kind != "custom":
        defects["cross_identity"] = _guard("gauge", cross_identity_check, spec, grid, DEFAULT_NODES)
    a_tilde = gt.transformed_potential
    max_a_tilde = max(float(np.abs(c).max()) for c in a_tilde.components)
    orig = eval_potential(spec, grid)
    fixed_point_gap = max(
        float(np.abs(a_tilde.components[j] - orig.components[j]).max()) for j in range(grid.dim)
    )
    defects["gauge_fixed_point_gap"] = fixed_point_gap
    if max_a_tilde <= 1e-13:
        reduced_field = None
        reduced_spec = None
    elif fixed_point_gap <= 1e-10 * (1.0 + max_a_tilde):
        reduced_field = a_tilde
        reduced_spec = spec  # reduction is a fixed point; keep the closed form
    else:
        reduced_field = a_tilde
        reduced_spec = None
    stages.append({"name": "gauge", "status": "ok", "max_reduced_potential": max_a_tilde})

    # hypothesis constants of the (gauge-invariant) field
    v_unit = np.zeros(grid.dim)
    v_unit[min(cfg.carleman_v_index, grid.dim - 1)] = 1.0
    hyp = hypothesis_report(spec, grid, v_unit, v1, v2, cfg.alpha, cfg.beta)
    defects["kernel_defect"] = hyp.kernel_defect
    m1 = hyp.M1
    n1 = hyp.N1

    # ----- stage II: base flow + heat regularization --------------------
    base_params = FlowParams(cfg.a, cfg.b, cfg.dt, cfg.t_end, cfg.store_every)
    system = PotentialSystem(grid, reduced_field, v1, v2, f_of_t)
    base_traj = _guard("regularize", evolve, u0, system, base_params)

    eps_list = sorted(set(EPS_SCAN) | {cfg.eps_reg}, reverse=True)
    reg_trajs = {}
    for eps in eps_list:
        reg_params = FlowParams(eps, cfg.b, cfg.dt, cfg.t_end, cfg.store_every)
        reg_trajs[eps] = _guard("regularize", evolve, u0, system, reg_params)
    reg_traj = reg_trajs[cfg.eps_reg]

    eps = cfg.eps_reg
    alpha_eps = float(np.sqrt(cfg.alpha ** 2 + 4.0 * eps))
    beta_eps = float(np.sqrt(cfg.beta ** 2 + 4.0 * eps))
    gamma_eps = 1.0 / (alpha_eps * beta_eps)

    v1_pos_sup = float(np.maximum(v1, 0.0).max()) if v1 is not None else 0.0
    worst_rate = 1.0 / min(cfg.alpha, cfg.beta) ** 2
    cap = 700.0
    if 2.0 * worst_rate * float(r2w.max()) > cap:
        raise PipelineFailure(
            "regularize",
            f"pair weight rate {worst_rate:.6g} overflows on this box; maximal admissible "
            f"rate is {cap / (2.0 * float(r2w.max())):.6g} (shrink the box, raise alpha/beta, "
            "or set trunc_radius)",
        )
    lhs0 = l2_norm_values(np.exp(r2w / beta_eps ** 2) * u0.values, grid)
    rhs0 = l2_norm_values(np.exp(r2w / cfg.beta ** 2) * u0.values, grid)
    pairs.append(_make_pair("initial_weight_monotone", lhs0, rhs0))

    heat_system = PotentialSystem(grid, reduced_field, v1)
    worst = {
        "final_weight_heat_bound": (0.0, 1.0),
        "mass_growth_bound": (0.0, 1.0),
        "forcing_mass_bound": (0.0, 1.0),
        "forcing_weight_bound": (0.0, 1.0),
    }
    composition_gap = 0.0
    for k in range(1, len(base_traj.times)):
        t = float(base_traj.times[k])
        u_t = base_traj.values[k]
        u_eps_t = heat_semigroup(u_t, heat_system, eps * t)
        growth = float(np.exp(eps * t * v1_pos_sup))
        cand = (
            l2_norm_values(np.exp(r2w / (cfg.alpha ** 2 + 4.0 * eps * t)) * u_eps_t, grid),
            growth * l2_norm_values(np.exp(r2w / cfg.alpha ** 2) * u_t, grid),
        )
        if cand[0] * worst["final_weight_heat_bound"][1] > worst["final_weight_heat_bound"][0] * cand[1]:
            worst["final_weight_heat_bound"] = cand
        cand = (l2_norm_values(u_eps_t, grid), growth * l2_norm_values(u_t, grid))
        if cand[0] * worst["mass_growth_bound"][1] > worst["mass_growth_bound"][0] * cand[1]:
            worst["mass_growth_bound"] = cand
        if v2 is not None:
            f_eps_t = (1j / (eps + 1j)) * heat_semigroup(v2(t) * u_t, heat_system, eps * t)
            v2_sup = float(np.abs(v2(t)).max())
            cand = (l2_norm_values(f_eps_t, grid), growth * v2_sup * l2_norm_values(u_t, grid))
            if cand[0] * worst["forcing_mass_bound"][1] > worst["forcing_mass_bound"][0] * cand[1]:
                worst["forcing_mass_bound"] = cand
            wexp = r2w / (alpha_eps * t + beta_eps * (1.0 - t)) ** 2
            wv2_sup = float((np.exp(wexp) * np.abs(v2(t))).max())
            cand = (
                l2_norm_values(np.exp(wexp) * f_eps_t, grid),
                growth * wv2_sup * l2_norm_values(u_t, grid),
            )
            if cand[0] * worst["forcing_weight_bound"][1] > worst["forcing_weight_bound"][0] * cand[1]:
                worst["forcing_weight_bound"] = cand
        # gap between the direct (eps+i)-flow and the composed construction
        if v2 is None and f_of_t is None:
            direct = reg_traj.values[k]
            gap = l2_norm_values(direct - u_eps_t, grid) / max(l2_norm_values(u_eps_t, grid), 1e-300)
            composition_gap = max(composition_gap, gap)
    pairs.append(_make_pair("final_weight_heat_bound", *worst["final_weight_heat_bound"]))
    pairs.append(_make_pair("mass_growth_bound", *worst["mass_growth_bound"]))
    if v2 is not None:
        pairs.append(_make_pair("forcing_mass_bound", *worst["forcing_mass_bound"]))
        pairs.append(_make_pair("forcing_weight_bound", *worst["forcing_weight_bound"]))
    defects["regularization_composition_gap"] = composition_gap
    stages.append({"name": "regularize", "status": "ok", "eps": eps})

    # ----- stage III: conformal transform --------------------------------
    params = AppellParams(alpha_eps, beta_eps, eps, cfg.b)
    identity_transform = abs(alpha_eps - beta_eps) <= 1e-14
    if identity_transform:
        transformed = reg_traj
        target_grid = grid
    else:
        target_grid = default_target_grid(grid, params)
        s_max = float(reg_traj.times[-1])
        t_max = alpha_eps * s_max / (beta_eps + (alpha_eps - beta_eps) * s_max)
        t_samples = np.linspace(0.0, t_max, len(reg_traj.times))
        vals = np.array(
            [_guard("transform", appell_forward, reg_traj, params, float(t), target_grid).values for t in t_samples]
        )
        transformed = Trajectory(
            grid=target_grid,
            times=t_samples,
            values=vals,
            params=reg_traj.params,
            norms=np.array([l2_norm_values(v, target_grid) for v in vals]),
            boundary_fractions=np.zeros(len(t_samples)),
            system=PotentialSystem(target_grid),
        )
    # transformed-potential transversality, measured by ray evaluation
    if reduced_field is not None and spec.kind != "custom":
        rho0 = spec.core_radius(grid)
        mask = interior_mask(target_grid, rho0)
        pts = np.stack(meshes(target_grid), axis=-1)
        worst_xa = 0.0
        worst_xat = 0.0
        for t_probe in (0.25, 0.5, 0.75):
            def x_dot_a_eps(tv):
                mt = appell_map_times(tv, alpha_eps, beta_eps)
                a_vals = mt.g * _a_tilde_at(spec, mt.g * pts, rho0)
                return sum(pts[..., j] * a_vals[..., j] for j in range(grid.dim))
            worst_xa = max(worst_xa, float(np.abs(x_dot_a_eps(t_probe))[mask].max()))
            dtp = 1e-4
            dd = (x_dot_a_eps(t_probe + dtp) - x_dot_a_eps(t_probe - dtp)) / (2 * dtp)
            worst_xat = max(worst_xat, float(np.abs(dd)[mask].max()))
        defects["transformed_transversality"] = worst_xa
        defects["transformed_transversality_rate"] = worst_xat
    else:
        defects["transformed_transversality"] = 0.0
        defects["transformed_transversality_rate"] = 0.0
    # residual of the transformed equation, when the potential keeps a closed form
    residual = None
    if reduced_field is None or reduced_spec is not None:
        margin = 2e-3
        ts = [x * float(transformed.times[-1]) for x in (0.25, 0.5, 0.75)]
        ts = [t for t in ts if margin < t < 1.0 - margin]
        if ts:
            residual = appell_residual(
                transformed if not identity_transform else reg_traj,
                AppellParams(1.0, 1.0, eps, cfg.b) if identity_transform else params,
                ts,
                target_grid,
                dt_fd=1e-4,
                a_spec=reduced_spec,
                v_at=(lambda pts_, s_: cfg.v1_value * np.exp(-cfg.v1_rate * np.sum(pts_ ** 2, axis=-1)))
                if cfg.v1_kind == "gaussian"
                else ((lambda pts_, s_: cfg.v1_value * np.ones(pts_.shape[:-1])) if cfg.v1_kind == "const" else None),
                rho0=spec.core_radius(grid),
            )
            defects["transform_residual"] = residual
    stages.append({"name": "transform", "status": "ok", "identity": identity_transform})

    # ----- stage IV: convexity and gradient monitors ----------------------
    c_scale = float(np.sqrt(alpha_eps * beta_eps))
    wspec = WeightSpec(
        "interpolating", alpha=c_scale, beta=c_scale, truncation_radius=cfg.trunc_radius
    )
    report = _guard("monitors", weighted_H, transformed, wspec)
    verdict = convexity_check(report, tol=1e-3)
    grad = _guard("monitors", gradient_bound_check, transformed, wspec, m1=m1, m_a=hyp.M_A)
    stages.append(
        {
            "name": "monitors",
            "status": "ok" if verdict.passed else "convexity_failed",
            "min_d2_theta": verdict.min_d2_theta,
            "interior_samples": verdict.interior_samples,
            "gradient_ratio": grad.ratio,
        }
    )

    # lower bound on the transformed mass, scanned over the regularization scale
    eps0 = None
    floor = l2_norm_values(u0.values, grid) / (2.0 * n1)
    for eps_k in eps_list:
        traj_k = reg_trajs[eps_k]
        a_k = float(np.sqrt(cfg.alpha ** 2 + 4.0 * eps_k))
        b_k = float(np.sqrt(cfg.beta ** 2 + 4.0 * eps_k))
        if abs(a_k - b_k) <= 1e-14:
            min_norm = float(np.min(traj_k.norms))
        else:
            p_k = AppellParams(a_k, b_k, eps_k, cfg.b)
            tg = default_target_grid(grid, p_k)
            s_mx = float(traj_k.times[-1])
            t_mx = a_k * s_mx / (b_k + (a_k - b_k) * s_mx)
            min_norm = min(
                l2_norm_values(appell_forward(traj_k, p_k, float(t), tg).values, tg)
                for t in np.linspace(0.0, t_mx, 9)
            )
        if min_norm >= floor and (eps0 is None or eps_k > eps0):
            eps0 = eps_k
        if eps_k == cfg.eps_reg:
            pairs.append(_make_pair("mass_lower_bound", floor, min_norm))
    stages.append({"name": "lower_bound", "status": "ok", "eps0": eps0})

    # ----- stage V: optional weighted-estimate sweep ----------------------
    carleman_rows: list = []
    if cfg.carleman_enabled:
        tspec = carleman_mod.TestFunctionSpec(
            spatial="gaussian_bump",
            width=cfg.carleman_bump_width,
            cutoff_m=cfg.carleman_cutoff_m,
            cutoff_r_time=cfg.carleman_time_rate,
        )
        times01 = np.linspace(0.0, 1.0, cfg.carleman_n_times)
        gfam = carleman_mod.cutoff_factory(tspec, target_grid, times01)
        # cutoff product with the transformed trajectory, horizon mapped to [0,1]
        span = float(transformed.times[-1] - transformed.times[0])
        for i, tau in enumerate(times01):
            if abs(gfam.values[i]).max() > 0:
                gfam.values[i] = gfam.values[i] * transformed.interp_values(
                    float(transformed.times[0] + tau * span)
                )
        p = carleman_mod.CarlemanParams(
            cfg.carleman_mu, cfg.carleman_eps, cfg.carleman_r,
            tuple(1.0 if j == cfg.carleman_v_index else 0.0 for j in range(grid.dim)),
        )
        a_field_t = reduced_field if identity_transform else None
        sides = _guard("carleman", carleman_mod.carleman_sides, gfam, a_field_t, p, hyp.sup_xtB)
        carleman_rows.append(
            carleman_mod.SweepRow(
                case_id=f"pipeline_mu{cfg.carleman_mu:g}_R{cfg.carleman_r:g}",
                mu=cfg.carleman_mu,
                eps=cfg.carleman_eps,
                big_r=cfg.carleman_r,
                v_index=cfg.carleman_v_index,
                sup_xtb=hyp.sup_xtB,
                admissible=sides.admissible,
                lhs=sides.lhs,
                rhs=sides.rhs,
                ratio=sides.ratio,
            )
        )
        stages.append({"name": "carleman", "status": "ok", "cells": len(carleman_rows)})

    passed = all(p.passed for p in pairs) and verdict.passed
    return PipelineReport(
        config_hash=config_hash(cfg),
        stages=stages,
        pairs=pairs,
        defects=defects,
        convexity=report,
        gradient_ratio=grad.ratio,
        carleman_rows=carleman_rows,
        eps0=eps0,
        passed=passed,
        transformed_traj=transformed,
        monitor_weight=wspec,
    )


# ---------------------------------------------------------------------------
# output writers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def write_monitors_csv(path: str, report: ConvexityReport, traj: Trajectory, wspec: WeightSpec) -> None:
    """monitors.csv: t, H, logH, theta, d2_logH, d2_theta, grad_lhs, boundary_mass."""
    grid = traj.grid
    k_axes, _ = wavenumber_multipliers(grid)
    span = float(traj.times[-1] - traj.times[0])
    rows = []
    for k in range(len(traj.times)):
        t = float(traj.times[k])
        w = np.exp(wspec.exponent(grid, t))
        fhat = np.fft.fftn(traj.values[k])
        grads = [np.fft.ifftn(1j * kk * fhat) for kk in k_axes]
        if traj.system is not None and traj.system.a_field is not None:
            grads = [
                grads[j] - 1j * traj.system.a_field.components[j] * traj.values[k]
                for j in range(grid.dim)
            ]
        that = (t - traj.times[0]) / span if span > 0 else 0.0
        grad_lhs = float(
            np.sqrt(that * (1 - that))
            * np.sqrt(grid.cell_volume * np.sum(w ** 2 * sum(np.abs(g) ** 2 for g in grads)))
        )
        rows.append(
            [t, report.H[k], report.logH[k], report.theta[k], report.d2_logH[k],
             report.d2_theta[k], grad_lhs, traj.boundary_fractions[k]]
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "H", "logH", "theta", "d2_logH", "d2_theta", "grad_lhs", "boundary_mass"])
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_carleman_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["case_id", "mu", "eps", "R", "v_index", "sup_xtB", "admissible", "lhs", "rhs", "ratio"]
        )
        for r in rows:
            writer.writerow(
                [r.case_id, _fmt(r.mu), _fmt(r.eps), _fmt(r.big_r), r.v_index,
                 _fmt(r.sup_xtb), _fmt(r.admissible), _fmt(r.lhs), _fmt(r.rhs), _fmt(r.ratio)]
            )


def write_trajectory(out_dir: str, traj: Trajectory, prefix: str = "snapshot") -> None:
    """One .npy per stored time plus an index manifest (time, norm, boundary mass)."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = os.path.join(out_dir, f"{prefix}_manifest.csv")
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "time", "norm", "boundary_mass", "file"])
        for k in range(len(traj.times)):
            fname = f"{prefix}_{k:05d}.npy"
            np.save(os.path.join(out_dir, fname), traj.values[k])
            writer.writerow(
                [k, _fmt(traj.times[k]), _fmt(traj.norms[k]), _fmt(traj.boundary_fractions[k]), fname]
            )


def report_to_json(report: PipelineReport) -> str:
    payload = {
        "config_hash": report.config_hash,
        "stages": report.stages,
        "pairs": [
            {"anchor": p.anchor, "lhs": p.lhs, "rhs": p.rhs, "ratio": p.ratio, "pass": p.passed}
            for p in report.pairs
        ],
        "defects": report.defects,
        "eps0": report.eps0,
        "gradient_ratio": report.gradient_ratio,
        "passed": report.passed,
    }
    return json.dumps(payload, indent=2, sort_keys=True, default=float)


def write_outputs(cfg: ExperimentConfig, report: PipelineReport, out_dir: str | None = None) -> str:
    out = out_dir or cfg.out_directory
    os.makedirs(out, exist_ok=True)
    if cfg.formats in ("json", "both"):
        with open(os.path.join(out, "report.json"), "w") as fh:
            fh.write(report_to_json(report))
    if cfg.formats in ("csv", "both"):
        if report.convexity is not None and report.transformed_traj is not None:
            write_monitors_csv(
                os.path.join(out, "monitors.csv"),
                report.convexity,
                report.transformed_traj,
                report.monitor_weight,
            )
        if report.carleman_rows:
            write_carleman_csv(os.path.join(out, "carleman.csv"), report.carleman_rows)
    return out


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "InequalityPair",
    "PipelineFailure",
    "PipelineReport",
    "build_initial",
    "build_potential_spec",
    "build_scalars",
    "config_hash",
    "load_config",
    "parse_config",
    "report_to_json",
    "run_pipeline",
    "serialize_config",
    "write_carleman_csv",
    "write_monitors_csv",
    "write_outputs",
    "write_trajectory",
]
