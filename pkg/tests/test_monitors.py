import numpy as np
import pytest

import covflow.evolve as E
import covflow.fields as F
import covflow.grid as G
import covflow.monitors as M

from _oracles import gaussian_weighted_norm_sq


@pytest.fixture(scope="module")
def g64():
    return G.GridSpec(2, 8.0, 64)


@pytest.fixture(scope="module")
def smooth_pair(g64):
    X, Y = G.meshes(g64)
    r2 = G.radius_squared(g64)

    def build(seed):
        rg = np.random.default_rng(seed)
        base = np.zeros(g64.shape, complex)
        for _ in range(6):
            kx, ky = rg.integers(-4, 5, 2)
            base += (rg.normal() + 1j * rg.normal()) * np.exp(1j * (np.pi / 8) * (kx * X + ky * Y))
        return G.SampledComplexField(g64, base * np.exp(-r2 / 4))

    return build(1), build(2)


def test_weight_validation():
    with pytest.raises(M.MonitorError):
        M.WeightSpec("exotic")
    with pytest.raises(M.MonitorError):
        M.WeightSpec("interpolating", alpha=-1.0)
    with pytest.raises(M.MonitorError):
        M.WeightSpec("carleman", mu=1.0, eps=1.0, big_r=4.0, v=(1.0, 1.0))


def test_weight_overflow_guard_names_admissible_rate():
    g = G.GridSpec(2, 30.0, 16)
    w = M.WeightSpec("static_gaussian", gamma=5.0)
    with pytest.raises(M.WeightOverflowError) as err:
        w.check_admissible(g)
    assert "maximal admissible rate" in str(err.value)


def test_dissipation_weight_rate_formula():
    w = M.WeightSpec("dissipation", gamma=0.25, a=1.0, b=1.0)
    t = 0.5
    assert w.rate(t) == pytest.approx(0.25 / (1.0 + 4 * 0.25 * 2 * t), rel=1e-14)
    # the defining property: phi_t = -(a + b^2/a) |grad phi|^2
    g = G.GridSpec(2, 4.0, 16)
    lhs = w.phi_t(g, t)
    gp = w.grad(g, t)
    rhs = -(1.0 + 1.0) * sum(x ** 2 for x in gp)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_weighted_H_gaussian_value():
    g = G.GridSpec(2, 8.0, 64)
    u0 = np.exp(-G.radius_squared(g))
    traj = E.Trajectory(
        grid=g, times=np.array([0.0, 0.5, 1.0]),
        values=np.array([u0, u0, u0], dtype=complex),
        params=E.FlowParams(0.0, 1.0, 1e-3, 1.0), norms=np.ones(3),
        boundary_fractions=np.zeros(3), system=E.PotentialSystem(g),
    )
    rep = M.weighted_H(traj, M.WeightSpec("static_gaussian", gamma=0.5))
    expect = np.sqrt(gaussian_weighted_norm_sq(1.0, 0.5, 2))
    assert rep.H[0] == pytest.approx(expect, abs=1e-10)


def test_weighted_H_gamma_zero_free_flow(g64):
    u0 = G.SampledComplexField(g64, np.exp(-G.radius_squared(g64)))
    traj = E.evolve(u0, E.PotentialSystem(g64), E.FlowParams(0.0, 1.0, 5e-4, 0.2, store_every=80))
    rep = M.weighted_H(traj, M.WeightSpec("static_gaussian", gamma=0.0))
    assert np.abs(rep.H - rep.H[0]).max() <= 1e-10 * rep.H[0]


def test_theta_scaling_interpolating():
    g = G.GridSpec(2, 8.0, 64)
    u0 = np.exp(-G.radius_squared(g))
    traj = E.Trajectory(
        grid=g, times=np.array([0.0, 0.5, 1.0]),
        values=np.array([u0, u0, u0], dtype=complex),
        params=E.FlowParams(0.0, 1.0, 1e-3, 1.0), norms=np.ones(3),
        boundary_fractions=np.zeros(3), system=E.PotentialSystem(g),
    )
    rep = M.weighted_H(traj, M.WeightSpec("interpolating", alpha=2.0, beta=2.0))
    assert np.allclose(rep.theta, 2.0 * rep.logH)


def test_convexity_free_gaussian_static_weight(g64):
    u0 = G.SampledComplexField(g64, np.exp(-G.radius_squared(g64)))
    traj = E.evolve(u0, E.PotentialSystem(g64), E.FlowParams(0.0, 1.0, 2e-4, 0.3, store_every=60))
    rep = M.weighted_H(traj, M.WeightSpec("static_gaussian", gamma=0.25, truncation_radius=6.0))
    verdict = M.convexity_check(rep, tol=1e-4)
    assert verdict.passed


def test_convexity_frozen_solution(g64):
    # forcing chosen so the state never moves: log H exactly constant
    r2 = G.radius_squared(g64)
    u0_vals = np.exp(-r2).astype(complex)
    lap = G.spectral_laplacian_values(u0_vals, g64)
    system = E.PotentialSystem(g64, f_of_t=lambda t: -lap)
    traj = E.evolve(G.SampledComplexField(g64, u0_vals), system, E.FlowParams(0.0, 1.0, 5e-4, 0.2, store_every=40))
    rep = M.weighted_H(traj, M.WeightSpec("static_gaussian", gamma=0.2))
    assert np.abs(np.diff(rep.logH)).max() <= 1e-9
    assert np.nanmax(np.abs(rep.d2_theta)) <= 1e-9


def test_convexity_negative_control():
    times = np.linspace(0.0, 1.0, 11)
    h_vals = np.exp(-(times - 0.5) ** 2)  # log-concave bump
    rep = M.ConvexityReport(
        times=times, H=h_vals, logH=np.log(h_vals), theta=np.log(h_vals),
        d2_logH=M._second_differences(times, np.log(h_vals)),
        d2_theta=M._second_differences(times, np.log(h_vals)),
        min_second_difference=0.0, interpolation_gap=np.zeros(11),
        weighted_boundary_fraction=0.0,
    )
    verdict = M.convexity_check(rep, tol=1e-3)
    assert not verdict.passed


def test_conjugated_apply_closed_form(g64, smooth_pair):
    v, _ = smooth_pair
    gamma = 0.3
    w = M.WeightSpec("static_gaussian", gamma=gamma)
    system = E.PotentialSystem(g64)
    r2 = G.radius_squared(g64)
    xs = G.meshes(g64)
    grads = G.spectral_gradient_values(v.values, g64)
    # a=0, b=1, static weight: S = -i(2 gamma n + 4 gamma x.grad), A = i(Lap + 4 gamma^2 r^2)
    sv = M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "S")
    expect_s = -1j * (2 * gamma * 2 * v.values + 4 * gamma * sum(xs[j] * grads[j] for j in range(2)))
    assert G.l2_norm_values(sv.values - expect_s, g64) <= 1e-8 * G.l2_norm_values(expect_s, g64)
    av = M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "A")
    expect_a = 1j * (G.spectral_laplacian_values(v.values, g64) + 4 * gamma ** 2 * r2 * v.values)
    assert G.l2_norm_values(av.values - expect_a, g64) <= 1e-8 * G.l2_norm_values(expect_a, g64)
    # phi = 0: S vanishes, A = i Lap_A
    w0 = M.WeightSpec("static_gaussian", gamma=0.0)
    assert np.abs(M.conjugated_apply(v, w0, system, 0.0, 1.0, 0.0, "S").values).max() <= 1e-14
    a0 = M.conjugated_apply(v, w0, system, 0.0, 1.0, 0.0, "A")
    assert G.l2_norm_values(a0.values - 1j * G.spectral_laplacian_values(v.values, g64), g64) <= 1e-12


def test_symmetry_and_antisymmetry(g64, smooth_pair):
    v, u = smooth_pair
    spec = F.PotentialSpec("constant_field", b0=1.5)
    system = E.PotentialSystem(g64, F.eval_potential(spec, g64))
    w = M.WeightSpec("static_gaussian", gamma=0.25)
    nv, nu = G.l2_norm(v), G.l2_norm(u)
    sv = M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "S")
    su = M.conjugated_apply(u, w, system, 0.0, 1.0, 0.0, "S")
    av = M.conjugated_apply(v, w, system, 0.0, 1.0, 0.0, "A")
    au = M.conjugated_apply(u, w, system, 0.0, 1.0, 0.0, "A")
    assert abs(G.inner_product(sv, u) - G.inner_product(v, su)) <= 1e-8 * nv * nu
    assert abs(G.inner_product(av, u) + G.inner_product(v, au)) <= 1e-8 * nv * nu


@pytest.mark.parametrize(
    "wspec,t0,a0,b0",
    [
        (M.WeightSpec("static_gaussian", gamma=0.25), 0.0, 0.0, 1.0),
        (M.WeightSpec("interpolating", alpha=1.0, beta=2.0), 0.3, 0.1, 1.0),
        (M.WeightSpec("dissipation", gamma=0.2, a=1.0, b=0.5), 0.2, 1.0, 0.5),
        (M.WeightSpec("carleman", mu=0.5, eps=1.0, big_r=4.0, v=(1.0, 0.0)), 0.35, 0.0, 1.0),
    ],
)
def test_commutator_form_against_operator_oracle(g64, smooth_pair, wspec, t0, a0, b0):
    """The term-by-term quadratic form must equal <[S,A]v + S_t v, v>."""
    v, _ = smooth_pair
    spec = F.PotentialSpec("constant_field", b0=1.5)
    system = E.PotentialSystem(g64, F.eval_potential(spec, g64))
    bt = F.magnetic_tensor(spec, g64, "analytic")
    form, _ = M.commutator_form(v, wspec, system, a0, b0, t0, bt.entries)

    def s_op(f, tt):
        return M.conjugated_apply(f, wspec, system, a0, b0, tt, "S")

    def a_op(f, tt):
        return M.conjugated_apply(f, wspec, system, a0, b0, tt, "A")

    comm = G.inner_product(s_op(a_op(v, t0), t0), v) - G.inner_product(a_op(s_op(v, t0), t0), v)
    dt = 1e-5
    st_vals = (s_op(v, t0 + dt).values - s_op(v, t0 - dt).values) / (2 * dt)
    oracle = (comm + G.inner_product(G.SampledComplexField(g64, st_vals), v)).real
    assert abs(form - oracle) <= 1e-6 * abs(oracle)


def test_commutator_nonnegative_without_field(g64, smooth_pair):
    v, _ = smooth_pair
    system = E.PotentialSystem(g64)
    gamma = 0.25
    form, parts = M.commutator_form(v, M.WeightSpec("static_gaussian", gamma=gamma), system, 0.0, 1.0)
    grads = G.spectral_gradient_values(v.values, g64)
    r2 = G.radius_squared(g64)
    expect = 8 * gamma * g64.cell_volume * np.sum(sum(np.abs(gr) ** 2 for gr in grads))
    expect += 32 * gamma ** 3 * g64.cell_volume * np.sum(r2 * np.abs(v.values) ** 2)
    assert form == pytest.approx(expect, rel=1e-12)
    assert form >= 0.0
    assert np.abs(M.commutator_form(
        G.SampledComplexField(g64, np.zeros(g64.shape, complex)),
        M.WeightSpec("static_gaussian", gamma=gamma), system, 0.0, 1.0)[0]) == 0.0


def test_commutator_lower_bound_block_field(smooth_pair):
    g3 = G.GridSpec(3, 6.0, 32)
    spec = F.PotentialSpec("block_field_3d")
    system = E.PotentialSystem(g3, F.eval_potential(spec, g3))
    bt = F.magnetic_tensor(spec, g3, "analytic")
    hyp = F.hypothesis_report(spec, g3, np.array([0.0, 0.0, 1.0]))
    rng = np.random.default_rng(4)
    X, Y, Z = G.meshes(g3)
    r2 = G.radius_squared(g3)
    base = np.zeros(g3.shape, complex)
    for _ in range(5):
        k = rng.integers(-3, 4, 3)
        base += (rng.normal() + 1j * rng.normal()) * np.exp(1j * (np.pi / 6) * (k[0] * X + k[1] * Y + k[2] * Z))
    v = G.SampledComplexField(g3, base * np.exp(-r2 / 3))
    form, _ = M.commutator_form(v, M.WeightSpec("static_gaussian", gamma=0.25), system, 0.0, 1.0, 0.0, bt.entries)
    assert form >= -hyp.M_A * G.l2_norm(v) ** 2 - 1e-6


def test_conjugation_residual_cases():
    g = G.GridSpec(2, 4.5, 36)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    system = E.PotentialSystem(g)
    traj = E.evolve(u0, system, E.FlowParams(0.0, 1.0, 2.5e-4, 0.1, store_every=1))
    assert M.conjugation_residual(traj, M.WeightSpec("static_gaussian", gamma=0.0), 0.0, 1.0) <= 1e-5
    assert M.conjugation_residual(traj, M.WeightSpec("static_gaussian", gamma=0.25), 0.0, 1.0) <= 1e-4
    trajh = E.evolve(u0, system, E.FlowParams(1.0, 0.0, 2.5e-4, 0.1, store_every=1))
    w = M.WeightSpec("dissipation", gamma=0.25, a=1.0, b=0.0)
    assert M.conjugation_residual(trajh, w, 1.0, 0.0) <= 1e-4


def test_dissipation_closed_form():
    g = G.GridSpec(2, 8.0, 64)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(1.0, 0.0, 5e-4, 0.5, store_every=100))
    pair = M.dissipation_check(traj, 0.25, 0.5)
    # closed form: rate(T) = 1/6, u(T) = (1+4T)^{-1} e^{-r^2/(1+4T)}
    lhs_cf = np.sqrt(gaussian_weighted_norm_sq(1.0 / 3.0, 1.0 / 6.0, 2)) / 3.0
    rhs_cf = np.sqrt(gaussian_weighted_norm_sq(1.0, 0.25, 2))
    assert pair.lhs == pytest.approx(lhs_cf, rel=1e-8)
    assert pair.rhs == pytest.approx(rhs_cf, rel=1e-8)
    assert pair.ratio <= 1.0
    # gamma = 0 reduces to plain mass decay
    pair0 = M.dissipation_check(traj, 0.0, 0.5)
    assert pair0.lhs == pytest.approx(traj.norms[-1], rel=1e-12)
    assert pair0.rhs == pytest.approx(traj.norms[0], rel=1e-12)
    assert pair0.ratio <= 1.0


def test_dissipation_requires_positive_a():
    g = G.GridSpec(2, 8.0, 64)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, 5e-4, 0.1, store_every=100))
    with pytest.raises(M.MonitorError):
        M.dissipation_check(traj, 0.1, 0.1)


def test_dissipation_complex_potential_inflation():
    # V = -0.5i with b = 1: the bound inflates by e^{0.5 T}; the solution
    # modulus grows by the same factor, so the ratio matches the free case
    g = G.GridSpec(2, 8.0, 64)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    v2 = lambda t: np.full(g.shape, -0.5j)
    traj = E.evolve(u0, E.PotentialSystem(g, v2_of_t=v2), E.FlowParams(1.0, 1.0, 2.5e-4, 0.5, store_every=200))
    pair = M.dissipation_check(traj, 0.1, 0.5)
    assert pair.m_t == pytest.approx(0.25, rel=1e-10)  # 0.5 * T
    assert pair.ratio <= 1.0


def test_gradient_bound_report():
    g = G.GridSpec(2, 8.0, 64)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, 5e-4, 0.2, store_every=40))
    w = M.WeightSpec("interpolating", alpha=2.5, beta=2.5)
    rep1 = M.gradient_bound_check(traj, w, m1=0.0, m_a=0.0)
    assert np.isfinite(rep1.lhs) and rep1.lhs > 0
    rep2 = M.gradient_bound_check(traj, w, m1=0.0, m_a=0.0)
    assert rep1.ratio == rep2.ratio  # deterministic
    # zero state gives a vanishing left side
    zero_traj = E.Trajectory(
        grid=g, times=traj.times, values=np.zeros_like(traj.values),
        params=traj.params, norms=np.zeros(len(traj.times)),
        boundary_fractions=np.zeros(len(traj.times)), system=E.PotentialSystem(g),
    )
    rep0 = M.gradient_bound_check(zero_traj, w, m1=0.0, m_a=0.0)
    assert rep0.lhs == 0.0


def test_gradient_bound_dt_refinement_drift():
    g = G.GridSpec(2, 8.0, 48)
    u0 = G.SampledComplexField(g, np.exp(-G.radius_squared(g)))
    w = M.WeightSpec("interpolating", alpha=2.5, beta=2.5)
    ratios = []
    for dt in (4e-4, 2e-4):
        traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, dt, 0.2, store_every=int(0.02 / dt)))
        ratios.append(M.gradient_bound_check(traj, w, m1=0.0, m_a=0.0).ratio)
    assert abs(ratios[0] - ratios[1]) <= 1e-4
