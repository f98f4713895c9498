"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here, not configurable.  The expensive trajectories are
shared through module-scoped fixtures.
"""

import json
import time

import numpy as np
import pytest

import covflow.carleman as C
import covflow.evolve as E
import covflow.fields as F
import covflow.gauge as GA
import covflow.grid as G
import covflow.monitors as M
import covflow.pipeline as P
import covflow.transform as T
from covflow.cli import main as cli_main
from covflow.cutoffs import radial_plateau

from _oracles import gaussian_flow


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def g64():
    return G.GridSpec(2, 8.0, 64)


@pytest.fixture(scope="module")
def free_source_traj():
    """Dispersive source run with full [0,1] mapped-time coverage for the transform."""
    g = G.GridSpec(2, 16.0, 128)
    u0 = G.SampledComplexField(g, np.exp(-0.25 * G.radius_squared(g)))
    return E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, 2.5e-4, 0.86, store_every=20))


@pytest.fixture(scope="module")
def heat_source_traj():
    g = G.GridSpec(2, 10.0, 80)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    return E.evolve(u0, E.PotentialSystem(g), E.FlowParams(1.0, 0.0, 1e-3, 1.0, store_every=2))


def test_criterion_free_solution_oracles(g64):
    """2D, L=8, N=64, dt=2e-4, t_end=0.5: closed-form Gaussian to 1e-6, under 60 s."""
    system = E.PotentialSystem(g64)
    r2 = G.radius_squared(g64)
    t0 = time.monotonic()
    u0 = G.SampledComplexField(g64, np.exp(-0.5 * r2))
    traj = E.evolve(u0, system, E.FlowParams(0.0, 1.0, 2e-4, 0.5, store_every=2500))
    exact = gaussian_flow(g64, 0.5, 1j, 0.5)
    err_s = G.l2_norm_values(traj.values[-1] - exact, g64) / G.l2_norm_values(exact, g64)
    t_s = time.monotonic() - t0
    t0 = time.monotonic()
    u0h = G.SampledComplexField(g64, np.exp(-r2))
    trajh = E.evolve(u0h, system, E.FlowParams(1.0, 0.0, 2e-4, 0.5, store_every=2500))
    exacth = gaussian_flow(g64, 1.0, 1.0, 0.5)
    err_h = G.l2_norm_values(trajh.values[-1] - exacth, g64) / G.l2_norm_values(exacth, g64)
    t_h = time.monotonic() - t0
    _verdict(
        "free-solution oracle",
        err_s <= 1e-6 and err_h <= 1e-6 and t_s <= 60.0 and t_h <= 60.0,
        f"schrodinger err={err_s:.2e} ({t_s:.0f}s), heat err={err_h:.2e} ({t_h:.0f}s)",
    )


def test_criterion_mass_unitarity(g64):
    """a=0 with a real potential: relative mass drift at most 1e-8 over t_end=0.5."""
    r2 = G.radius_squared(g64)
    v1 = -0.8 * np.exp(-r2 / 2.0)
    u0 = G.SampledComplexField(g64, np.exp(-r2))
    traj = E.evolve(u0, E.PotentialSystem(g64, v1=v1), E.FlowParams(0.0, 1.0, 2e-4, 0.5, store_every=250))
    drift = float(np.abs(traj.norms - traj.norms[0]).max() / traj.norms[0])
    _verdict("mass unitarity", drift <= 1e-8, f"max relative drift {drift:.2e}")


def test_criterion_cronstrom_suite(g64):
    g3 = G.GridSpec(3, 6.0, 32)
    # pure gauge reduces to zero
    gt = GA.cronstrom_potential(F.PotentialSpec("pure_gauge"), g64, 32)
    pure_max = max(np.abs(c).max() for c in gt.transformed_potential.components)
    # constant field is a fixed point at K=32
    spec_c = F.PotentialSpec("constant_field", b0=2.0)
    gt_c = GA.cronstrom_potential(spec_c, g64, 32)
    a_c = F.eval_potential(spec_c, g64)
    fixed_gap = max(
        np.abs(gt_c.transformed_potential.components[j] - a_c.components[j]).max() for j in range(2)
    )
    # transversality across the zoo
    worst_transv = 0.0
    for spec, grid in (
        (F.PotentialSpec("zero"), g64),
        (F.PotentialSpec("pure_gauge"), g64),
        (spec_c, g64),
        (F.PotentialSpec("aharonov_bohm_2d"), g64),
        (F.PotentialSpec("block_field_3d"), g3),
        (F.PotentialSpec("block_matrix_3d"), g3),
    ):
        worst_transv = max(worst_transv, GA.cronstrom_potential(spec, grid, 32).transversality_defect)
    # vortex pathology: tangential field identically zero with a nonzero potential
    spec_ab = F.PotentialSpec("aharonov_bohm_2d")
    rep = F.hypothesis_report(spec_ab, g64, np.array([1.0, 0.0]))
    ab_max_a = max(np.abs(c).max() for c in F.eval_potential(spec_ab, g64).components)
    gt_ab = GA.cronstrom_potential(spec_ab, g64, 32)
    ab_reduced = max(np.abs(c).max() for c in gt_ab.transformed_potential.components)
    ok = (
        pure_max <= 1e-10
        and fixed_gap <= 1e-12
        and worst_transv <= 1e-8
        and rep.sup_xtB <= 1e-8
        and ab_max_a > 0.5
        and ab_reduced <= 1e-12
    )
    _verdict(
        "cronstrom suite",
        ok,
        f"pure={pure_max:.1e} fixed={fixed_gap:.1e} transv={worst_transv:.1e} "
        f"vortex supB={rep.sup_xtB:.1e} |A|={ab_max_a:.2f}",
    )


def test_criterion_gauge_equivariance(g64):
    u0 = G.SampledComplexField(g64, np.exp(-G.radius_squared(g64)))
    system = E.PotentialSystem(g64, F.eval_potential(F.PotentialSpec("constant_field", b0=2.0), g64))
    X, Y = G.meshes(g64)
    r = np.sqrt(G.radius_squared(g64))
    chi = X * Y * np.exp(-G.radius_squared(g64) / 1.8 ** 2)
    chi = chi * radial_plateau(r, 0.6 * g64.half_width, 0.75 * g64.half_width)
    grads = G.spectral_gradient_values(chi.astype(complex), g64)
    gchi = G.SampledRealVectorField(g64, tuple(gr.real for gr in grads))
    defect = E.gauge_equivariance_test(
        u0, system, chi, gchi, E.FlowParams(0.0, 1.0, 2e-4, 0.25, store_every=1250)
    )
    _verdict("gauge equivariance", defect <= 1e-5, f"relative discrepancy {defect:.2e}")


def test_criterion_appell_suite(free_source_traj, heat_source_traj):
    # exact identity at matched parameters
    params_id = T.AppellParams(1.3, 1.3, 0.0, 1.0)
    out = T.appell_forward(free_source_traj, params_id, 0.4, free_source_traj.grid)
    ref = free_source_traj.interp_values(0.4)
    id_gap = float(
        G.l2_norm_values(out.values - ref, free_source_traj.grid)
        / G.l2_norm_values(ref, free_source_traj.grid)
    )
    # transformed-equation residual for the free Gaussian at (1, 2)
    params = T.AppellParams(1.0, 2.0, 0.0, 1.0)
    dst = T.default_target_grid(free_source_traj.grid, params)
    residual = T.appell_residual(free_source_traj, params, [0.25, 0.5, 0.7], dst, dt_fd=1e-4)
    # the four weighted-norm identities on Gaussian data
    params_h = T.AppellParams(1.0, 2.0, 1.0, 0.0)
    dst_h = T.default_target_grid(heat_source_traj.grid, params_h)
    pairs = T.appell_norm_identities(
        heat_source_traj, params_h, gamma=0.05, t=0.4, target_grid=dst_h, quad_nodes=40
    )
    worst_pair = max(p.relative_gap for p in pairs)
    ok = id_gap <= 1e-10 and residual <= 1e-4 and worst_pair <= 1e-8
    _verdict(
        "appell suite",
        ok,
        f"identity={id_gap:.2e} residual={residual:.2e} norm-identities={worst_pair:.2e}",
    )


def test_criterion_conjugated_operator_algebra():
    g = G.GridSpec(2, 4.5, 36)
    X, Y = G.meshes(g)
    r2 = G.radius_squared(g)

    def smooth(seed):
        rg = np.random.default_rng(seed)
        base = np.zeros(g.shape, complex)
        for _ in range(6):
            kx, ky = rg.integers(-3, 4, 2)
            base += (rg.normal() + 1j * rg.normal()) * np.exp(1j * (np.pi / 4.5) * (kx * X + ky * Y))
        return G.SampledComplexField(g, base * np.exp(-r2))

    v, u = smooth(1), smooth(2)
    system = E.PotentialSystem(g, F.eval_potential(F.PotentialSpec("constant_field", b0=1.5), g))
    w = M.WeightSpec("static_gaussian", gamma=0.25)
    nv, nu = G.l2_norm(v), G.l2_norm(u)
    sym = abs(
        G.inner_product(M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "S"), u)
        - G.inner_product(v, M.conjugated_apply(u, w, system, 0.0, 1.0, 0.0, "S"))
    ) / (nv * nu)
    skew = abs(
        G.inner_product(M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "A"), u)
        + G.inner_product(v, M.conjugated_apply(u, w, system, 0.0, 1.0, 0.0, "A"))
    ) / (nv * nu)
    u0 = G.SampledComplexField(g, np.exp(-r2))
    traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, 2.5e-4, 0.1, store_every=1))
    residual = M.conjugation_residual(traj, w, 0.0, 1.0)
    ok = sym <= 1e-8 and skew <= 1e-8 and residual <= 1e-4
    _verdict(
        "conjugated operator algebra",
        ok,
        f"symmetry={sym:.2e} antisymmetry={skew:.2e} residual={residual:.2e}",
    )


def test_criterion_commutator_lower_bound():
    """Ten random test fields times three weights, plus exact positivity at A=0."""
    g2 = G.GridSpec(2, 8.0, 64)
    g3 = G.GridSpec(3, 6.0, 32)
    weights = [M.WeightSpec("static_gaussian", gamma=gam) for gam in (0.1, 0.25, 0.5)]
    cases = []
    for grid, spec in (
        (g2, F.PotentialSpec("zero")),
        (g2, F.PotentialSpec("constant_field", b0=1.5)),
        (g3, F.PotentialSpec("block_field_3d")),
    ):
        system = E.PotentialSystem(
            grid, None if spec.kind == "zero" else F.eval_potential(spec, grid)
        )
        b_entries = None if spec.kind == "zero" else F.magnetic_tensor(spec, grid, "analytic").entries
        v_unit = np.zeros(grid.dim)
        v_unit[-1] = 1.0
        m_a = F.hypothesis_report(spec, grid, v_unit).M_A
        cases.append((grid, system, b_entries, m_a, spec.kind))

    worst_margin = np.inf
    count = 0
    for i in range(10):
        grid, system, b_entries, m_a, kind = cases[i % len(cases)]
        rg = np.random.default_rng(100 + i)
        xs = G.meshes(grid)
        base = np.zeros(grid.shape, complex)
        for _ in range(5):
            k = rg.integers(-3, 4, grid.dim)
            base += (rg.normal() + 1j * rg.normal()) * np.exp(
                1j * (np.pi / grid.half_width) * sum(k[j] * xs[j] for j in range(grid.dim))
            )
        v = G.SampledComplexField(grid, base * np.exp(-G.radius_squared(grid) / 3.0))
        for w in weights:
            form, _ = M.commutator_form(v, w, system, 0.0, 1.0, 0.0, b_entries)
            bound = -m_a * G.l2_norm(v) ** 2 - 1e-6
            worst_margin = min(worst_margin, form - bound)
            count += 1
            if kind == "zero":
                assert form >= -1e-12 * G.l2_norm(v) ** 2
    _verdict(
        "commutator lower bound",
        worst_margin >= 0.0,
        f"{count} cells, worst margin above the bound {worst_margin:.3e}",
    )


def test_criterion_dissipation():
    g = G.GridSpec(2, 12.0, 96)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    heat = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(1.0, 0.0, 5e-4, 1.0, store_every=250))
    ratios = []
    for gam in (0.1, 0.25):
        for t_final in (0.25, 0.5, 1.0):
            pair = M.dissipation_check(heat, gam, t_final, truncation_radius=6.0)
            ratios.append(pair.ratio)
    # complex-potential variant; its weighted tails need the shorter horizons
    v2 = lambda t: np.full(g.shape, -0.5j)
    cplx = E.evolve(
        u0, E.PotentialSystem(g, v2_of_t=v2), E.FlowParams(1.0, 1.0, 5e-4, 0.5, store_every=250)
    )
    for gam in (0.1, 0.25):
        for t_final in (0.25, 0.5):
            pair = M.dissipation_check(cplx, gam, t_final, truncation_radius=6.0)
            ratios.append(pair.ratio)
    worst = max(ratios)
    _verdict("dissipation inequality", worst <= 1.0 + 1e-8, f"{len(ratios)} cases, worst ratio {worst:.6f}")


def test_criterion_log_convexity(g64):
    u0 = G.SampledComplexField(g64, np.exp(-G.radius_squared(g64)))
    wspec = M.WeightSpec("interpolating", alpha=2.0, beta=2.0, truncation_radius=6.0)
    worst = np.inf
    samples = None
    for eps in (1e-2, 1e-3):
        traj = E.evolve(
            u0, E.PotentialSystem(g64), E.FlowParams(eps, 1.0, 2e-4, 0.3, store_every=60)
        )
        report = M.weighted_H(traj, wspec)
        verdict = M.convexity_check(report, tol=1e-3)
        worst = min(worst, verdict.min_d2_theta)
        samples = verdict.interior_samples
        assert verdict.passed
    # negative control: a concave series must fail
    times = np.linspace(0.0, 1.0, 25)
    h_fake = np.exp(-((times - 0.5) ** 2))
    fake = M.ConvexityReport(
        times=times, H=h_fake, logH=np.log(h_fake), theta=np.log(h_fake),
        d2_logH=M._second_differences(times, np.log(h_fake)),
        d2_theta=M._second_differences(times, np.log(h_fake)),
        min_second_difference=0.0, interpolation_gap=np.zeros(len(times)),
        weighted_boundary_fraction=0.0,
    )
    control_failed = not M.convexity_check(fake, tol=1e-3).passed
    _verdict(
        "log convexity at desk scale",
        worst >= -1e-3 and samples >= 21 and control_failed,
        f"min second difference {worst:.3e} over {samples} interior samples; negative control rejects",
    )


def test_criterion_carleman_sweep():
    t0 = time.monotonic()
    g2 = G.GridSpec(2, 8.0, 64)
    bump = C.TestFunctionSpec(spatial="gaussian_bump", width=0.8, cutoff_m=3.0, cutoff_r_time=8.0)
    rows2 = C.sweep(g2, bump, [0.25, 0.5, 1.0], [4.0, 8.0, 16.0], 1.0, 0, 801, None, 0.0)
    g3 = G.GridSpec(3, 6.0, 32)
    spec3 = F.PotentialSpec("block_matrix_3d")
    hyp = F.hypothesis_report(spec3, g3, np.array([0.0, 0.0, 1.0]))
    bump3 = C.TestFunctionSpec(spatial="gaussian_bump", width=0.7, cutoff_m=2.5, cutoff_r_time=8.0)
    rows3 = C.sweep(g3, bump3, [0.25, 0.5, 1.0], [4.0, 8.0, 16.0], 1.0, 2, 401, spec3, hyp.sup_xtB)
    admissible = [r for r in rows2 + rows3 if r.admissible]
    worst = max(r.ratio for r in admissible)
    # quadrature convergence under time-sample doubling
    p = C.CarlemanParams(0.5, 1.0, 8.0, (1.0, 0.0))
    s1 = C.carleman_sides(C.cutoff_factory(bump, g2, np.linspace(0, 1, 801)), None, p)
    s2 = C.carleman_sides(C.cutoff_factory(bump, g2, np.linspace(0, 1, 1601)), None, p)
    conv = max(abs(s2.lhs - s1.lhs) / s1.lhs, abs(s2.rhs - s1.rhs) / s1.rhs)
    elapsed = time.monotonic() - t0
    ok = worst <= 1.0 + 5e-3 and conv <= 1e-3 and elapsed <= 300.0 and len(admissible) >= 12
    _verdict(
        "carleman sweep",
        ok,
        f"{len(admissible)} admissible cells, worst ratio {worst:.4f}, "
        f"doubling change {conv:.1e}, {elapsed:.0f}s",
    )


PIPE_CFG = """
[grid]
dim = 2
n_points = 48
half_width = 6.0
[flow]
a = 0.0
b = 1.0
eps_reg = 1e-3
dt = 2e-4
t_end = 0.1
store_every = 25
[potential]
kind = {kind}
b0 = 1.0
[initial]
kind = gaussian
rate = 2.0
[weights]
alpha = 3.0
beta = 3.0
[output]
directory = {out}
formats = both
"""


def test_criterion_pipeline_end_to_end(tmp_path):
    reports = {}
    for kind in ("zero", "pure_gauge", "constant_field"):
        cfg_path = tmp_path / f"{kind}.cfg"
        out = tmp_path / kind
        cfg_path.write_text(PIPE_CFG.format(kind=kind, out=out))
        code = cli_main(["pipeline", "--config", str(cfg_path), "--quiet"])
        assert code == 0, f"{kind} config exited {code}"
        reports[kind] = json.loads((out / "report.json").read_text())
    worst_ratio = 0.0
    for kind, rep in reports.items():
        for pair in rep["pairs"]:
            assert pair["pass"], (kind, pair)
            worst_ratio = max(worst_ratio, pair["ratio"])
    # the pure-gauge run reduces to the free problem and must reproduce it
    gap = 0.0
    for pz, pp in zip(reports["zero"]["pairs"], reports["pure_gauge"]["pairs"]):
        scale = max(abs(pz["lhs"]), abs(pz["rhs"]), 1e-300)
        gap = max(gap, abs(pz["lhs"] - pp["lhs"]) / scale, abs(pz["rhs"] - pp["rhs"]) / scale)
    mz = (tmp_path / "zero" / "monitors.csv").read_text()
    mp = (tmp_path / "pure_gauge" / "monitors.csv").read_text()
    ok = worst_ratio <= 1.0 + 1e-6 and gap <= 1e-6 and mz == mp
    _verdict(
        "pipeline end to end",
        ok,
        f"worst pair ratio {worst_ratio:.8f}, pure-gauge vs zero gap {gap:.2e}",
    )
