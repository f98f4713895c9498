"""Weighted-norm time series, conjugated operators, and inequality checks.

Every weight derivative used here (grad, Hessian, time derivatives) is closed
form per weight kind; differentiating a non-periodic weight spectrally on the
torus would be the dominant error source, so it is never done.  All Gaussian
kinds have Hessian 2*rate(t)*Identity and vanishing bilaplacian, which the
commutator quadratic form exploits term by term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import PotentialSystem, Trajectory
from .grid import (
    GridSpec,
    SampledComplexField,
    boundary_mass_fraction,
    l2_norm_values,
    meshes,
    radius_squared,
    wavenumber_multipliers,
)

MAX_WEIGHT_EXPONENT = 700.0
WEIGHTED_BOUNDARY_LIMIT = 1e-6


class MonitorError(ValueError):
    pass


class WeightOverflowError(MonitorError):
    pass


@dataclass(frozen=True)
class WeightSpec:
    """Gaussian-type exponential weight exp(phi(x,t)).

    kinds: static_gaussian (phi = gamma |x|^2, optionally truncated flat past
    truncation_radius), interpolating (rate 1/(alpha t + beta (1-t))^2),
    dissipation (rate gamma a/(a + 4 gamma (a^2+b^2) t)), carleman
    (mu |x + R t(1-t) v|^2 - (1+eps) R^2 t(1-t)/(16 mu)).
    """

    kind: str
    gamma: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    a: float = 1.0
    b: float = 0.0
    mu: float = 0.0
    eps: float = 0.0
    big_r: float = 0.0
    v: tuple = ()
    truncation_radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("static_gaussian", "interpolating", "dissipation", "carleman"):
            raise MonitorError(f"unknown weight kind {self.kind!r}")
        if self.kind == "interpolating" and (self.alpha <= 0 or self.beta <= 0):
            raise MonitorError("interpolating weight needs positive alpha, beta")
        if self.kind == "dissipation" and (self.gamma < 0 or self.a <= 0):
            raise MonitorError("dissipation weight needs gamma >= 0 and a > 0")
        if self.kind == "carleman":
            if self.mu <= 0 or self.eps <= 0 or self.big_r <= 0:
                raise MonitorError("carleman weight needs positive mu, eps, R")
            vv = np.asarray(self.v, dtype=float)
            if abs(np.linalg.norm(vv) - 1.0) > 1e-12:
                raise MonitorError("carleman weight needs a unit drift vector")
        if self.truncation_radius is not None and self.truncation_radius <= 0:
            raise MonitorError("truncation_radius must be positive")

    # -- scalar rate for the Gaussian kinds ---------------------------------
    def rate(self, t: float) -> float:
        if self.kind == "static_gaussian":
            return self.gamma
        if self.kind == "interpolating":
            return 1.0 / (self.alpha * t + self.beta * (1.0 - t)) ** 2
        if self.kind == "dissipation":
            return self.gamma * self.a / (self.a + 4.0 * self.gamma * (self.a ** 2 + self.b ** 2) * t)
        raise MonitorError("carleman weight has no scalar rate")

    def rate_dt(self, t: float) -> float:
        if self.kind == "static_gaussian":
            return 0.0
        if self.kind == "interpolating":
            return -2.0 * (self.alpha - self.beta) / (self.alpha * t + self.beta * (1.0 - t)) ** 3
        if self.kind == "dissipation":
            d = self.a + 4.0 * self.gamma * (self.a ** 2 + self.b ** 2) * t
            return -4.0 * self.gamma ** 2 * self.a * (self.a ** 2 + self.b ** 2) / d ** 2
        raise MonitorError("carleman weight has no scalar rate")

    def rate_dtt(self, t: float) -> float:
        if self.kind == "static_gaussian":
            return 0.0
        if self.kind == "interpolating":
            return 6.0 * (self.alpha - self.beta) ** 2 / (self.alpha * t + self.beta * (1.0 - t)) ** 4
        if self.kind == "dissipation":
            c = 4.0 * self.gamma * (self.a ** 2 + self.b ** 2)
            d = self.a + c * t
            return 2.0 * self.gamma * self.a * c ** 2 / d ** 3
        raise MonitorError("carleman weight has no scalar rate")

    def scale(self, t: float) -> float:
        """Exponent scale used for the convexity functional (theta)."""
        if self.kind == "interpolating":
            return self.alpha * t + self.beta * (1.0 - t)
        if self.kind == "static_gaussian" and self.gamma > 0:
            return 1.0 / np.sqrt(self.gamma)
        return 1.0

    # -- spatial data --------------------------------------------------------
    def _drift(self, t: float) -> float:
        return self.big_r * t * (1.0 - t)

    def exponent(self, grid: GridSpec, t: float) -> np.ndarray:
        if self.kind == "carleman":
            xs = meshes(grid)
            vv = np.asarray(self.v, dtype=float)
            q = self._drift(t)
            shifted = sum((xs[j] + q * vv[j]) ** 2 for j in range(grid.dim))
            expo = self.mu * shifted - (1.0 + self.eps) * self.big_r ** 2 * t * (1.0 - t) / (16.0 * self.mu)
        else:
            r2 = radius_squared(grid)
            if self.truncation_radius is not None:
                r2 = np.minimum(r2, self.truncation_radius ** 2)
            expo = self.rate(t) * r2
        mx = float(expo.max())
        if mx > MAX_WEIGHT_EXPONENT:
            hint = ""
            if self.kind != "carleman":
                r2max = float(radius_squared(grid).max())
                hint = f"; maximal admissible rate on this grid is {MAX_WEIGHT_EXPONENT / r2max:.6g}"
            raise WeightOverflowError(f"weight exponent {mx:.3g} exceeds {MAX_WEIGHT_EXPONENT:g}{hint}")
        return expo

    def check_admissible(self, grid: GridSpec) -> None:
        """2*rate*(0.9 L)^2 must stay under the exponent cap for Gaussian kinds."""
        if self.kind == "carleman":
            return
        worst = max(self.rate(0.0), self.rate(1.0))
        edge = (0.9 * grid.half_width) ** 2
        if 2.0 * worst * edge > MAX_WEIGHT_EXPONENT:
            raise WeightOverflowError(
                f"rate {worst:.6g} inadmissible on this grid; maximal admissible rate is "
                f"{MAX_WEIGHT_EXPONENT / (2.0 * edge):.6g}"
            )

    def requires_smooth(self) -> None:
        if self.truncation_radius is not None:
            raise MonitorError("truncated weights are not differentiable; use an untruncated kind")

    def grad(self, grid: GridSpec, t: float) -> list[np.ndarray]:
        self.requires_smooth()
        xs = meshes(grid)
        if self.kind == "carleman":
            vv = np.asarray(self.v, dtype=float)
            q = self._drift(t)
            return [2.0 * self.mu * (xs[j] + q * vv[j]) for j in range(grid.dim)]
        r = self.rate(t)
        return [2.0 * r * xs[j] for j in range(grid.dim)]

    def hess_coeff(self, t: float) -> float:
        """phi has Hessian hess_coeff * Identity for every supported kind."""
        self.requires_smooth()
        return 2.0 * (self.mu if self.kind == "carleman" else self.rate(t))

    def lap(self, grid: GridSpec, t: float) -> float:
        return self.hess_coeff(t) * grid.dim

    def phi_t(self, grid: GridSpec, t: float) -> np.ndarray:
        self.requires_smooth()
        if self.kind == "carleman":
            xs = meshes(grid)
            vv = np.asarray(self.v, dtype=float)
            q = self._drift(t)
            qd = self.big_r * (1.0 - 2.0 * t)
            x_dot_v = sum(xs[j] * vv[j] for j in range(grid.dim))
            return (
                2.0 * self.mu * (x_dot_v + q) * qd
                - (1.0 + self.eps) * self.big_r ** 2 * (1.0 - 2.0 * t) / (16.0 * self.mu)
            )
        return self.rate_dt(t) * radius_squared(grid)

    def phi_tt(self, grid: GridSpec, t: float) -> np.ndarray:
        self.requires_smooth()
        if self.kind == "carleman":
            xs = meshes(grid)
            vv = np.asarray(self.v, dtype=float)
            q = self._drift(t)
            qd = self.big_r * (1.0 - 2.0 * t)
            x_dot_v = sum(xs[j] * vv[j] for j in range(grid.dim))
            return (
                2.0 * self.mu * (-2.0 * self.big_r) * (x_dot_v + q)
                + 2.0 * self.mu * qd ** 2
                + (1.0 + self.eps) * self.big_r ** 2 / (8.0 * self.mu)
            ) * np.ones(grid.shape)
        return self.rate_dtt(t) * radius_squared(grid)

    def grad_phi_t(self, grid: GridSpec, t: float) -> list[np.ndarray]:
        self.requires_smooth()
        if self.kind == "carleman":
            vv = np.asarray(self.v, dtype=float)
            qd = self.big_r * (1.0 - 2.0 * t)
            return [2.0 * self.mu * qd * vv[j] * np.ones(grid.shape) for j in range(grid.dim)]
        rd = self.rate_dt(t)
        xs = meshes(grid)
        return [2.0 * rd * xs[j] for j in range(grid.dim)]


def _second_differences(times: np.ndarray, series: np.ndarray) -> np.ndarray:
    """Centered second differences; NaN at the ends.

    Uniform spacing gives the plain f_{k+1} - 2 f_k + f_{k-1}; uneven triples
    (a ragged final snapshot) fall back to the divided-difference estimate
    scaled by the mean spacing squared.
    """
    n = len(times)
    out = np.full(n, np.nan)
    for k in range(1, n - 1):
        h1 = times[k] - times[k - 1]
        h2 = times[k + 1] - times[k]
        if abs(h1 - h2) <= 1e-9 * max(h1, h2):
            out[k] = series[k + 1] - 2.0 * series[k] + series[k - 1]
        else:
            dd = (series[k + 1] - series[k]) / h2 - (series[k] - series[k - 1]) / h1
            out[k] = dd / (0.5 * (h1 + h2)) * (0.5 * (h1 + h2)) ** 2
    return out


@dataclass
class ConvexityReport:
    times: np.ndarray
    H: np.ndarray
    logH: np.ndarray
    theta: np.ndarray
    d2_logH: np.ndarray
    d2_theta: np.ndarray
    min_second_difference: float
    interpolation_gap: np.ndarray
    weighted_boundary_fraction: float


def weighted_H(traj: Trajectory, wspec: WeightSpec) -> ConvexityReport:
    """Weighted norms H(t_k) over the stored snapshots, with the convexity series."""
    wspec.check_admissible(traj.grid)
    n = len(traj.times)
    H = np.zeros(n)
    worst_frac = 0.0
    for k in range(n):
        w = np.exp(wspec.exponent(traj.grid, float(traj.times[k])))
        wf = w * traj.values[k]
        frac = boundary_mass_fraction(wf, traj.grid)
        worst_frac = max(worst_frac, frac)
        if frac > WEIGHTED_BOUNDARY_LIMIT:
            raise MonitorError(
                f"weighted boundary mass fraction {frac:.3e} exceeds "
                f"{WEIGHTED_BOUNDARY_LIMIT:g} at t={traj.times[k]:g}; weighted tails leave the box"
            )
        H[k] = l2_norm_values(wf, traj.grid)
    if np.any(H <= 0):
        raise MonitorError("weighted norm vanished; convexity series undefined")
    logH = np.log(H)
    theta = np.array([wspec.scale(float(t)) for t in traj.times]) * logH
    d2_log = _second_differences(traj.times, logH)
    d2_theta = _second_differences(traj.times, theta)
    span = traj.times[-1] - traj.times[0]
    that = (traj.times - traj.times[0]) / span if span > 0 else traj.times * 0.0
    if wspec.kind == "interpolating":
        tau = wspec.alpha * that / (wspec.alpha * that + wspec.beta * (1.0 - that))
    else:
        tau = that
    gap = H - H[0] ** (1.0 - tau) * H[-1] ** tau
    return ConvexityReport(
        times=traj.times.copy(),
        H=H,
        logH=logH,
        theta=theta,
        d2_logH=d2_log,
        d2_theta=d2_theta,
        min_second_difference=float(np.nanmin(d2_theta)),
        interpolation_gap=gap,
        weighted_boundary_fraction=worst_frac,
    )


@dataclass(frozen=True)
class ConvexityVerdict:
    passed: bool
    min_d2_theta: float
    min_d2_logH: float
    tol: float
    interior_samples: int


def convexity_check(report: ConvexityReport, tol: float = 1e-3) -> ConvexityVerdict:
    interior = np.isfinite(report.d2_theta)
    if interior.sum() < 1:
        raise MonitorError("need at least 3 time samples for a convexity verdict")
    mn_theta = float(np.nanmin(report.d2_theta))
    mn_log = float(np.nanmin(report.d2_logH))
    return ConvexityVerdict(
        passed=bool(mn_theta >= -tol),
        min_d2_theta=mn_theta,
        min_d2_logH=mn_log,
        tol=tol,
        interior_samples=int(interior.sum()),
    )


def _covariant_gradient(values: np.ndarray, system: PotentialSystem) -> list[np.ndarray]:
    k_axes, _ = wavenumber_multipliers(system.grid)
    fhat = np.fft.fftn(values)
    grads = [np.fft.ifftn(1j * k * fhat) for k in k_axes]
    if system.a_field is not None:
        grads = [grads[j] - 1j * system.a_field.components[j] * values for j in range(system.grid.dim)]
    return grads


def conjugated_apply(
    v: SampledComplexField,
    wspec: WeightSpec,
    system: PotentialSystem,
    a: float,
    b: float,
    t: float = 0.0,
    which: str = "S",
) -> SampledComplexField:
    """Apply the symmetric (S) or skew-symmetric (A) conjugated operator.

    S = a(Lap_A + |grad phi|^2) - ib(Lap phi + 2 grad phi . grad_A) + phi_t
    A = ib(Lap_A + |grad phi|^2) - a(Lap phi + 2 grad phi . grad_A)
    """
    if which not in ("S", "A"):
        raise MonitorError("which must be 'S' or 'A'")
    grid = system.grid
    gphi = wspec.grad(grid, t)
    gphi_sq = sum(gp ** 2 for gp in gphi)
    lap_phi = wspec.lap(grid, t)
    cov = system.covariant_terms(v.values)
    grads = _covariant_gradient(v.values, system)
    drift = sum(gphi[j] * grads[j] for j in range(grid.dim))
    elliptic = cov + gphi_sq * v.values
    first_order = lap_phi * v.values + 2.0 * drift
    if which == "S":
        out = a * elliptic - 1j * b * first_order + wspec.phi_t(grid, t) * v.values
    else:
        out = 1j * b * elliptic - a * first_order
    return SampledComplexField(grid, out)


def conjugation_residual(
    traj: Trajectory, wspec: WeightSpec, a: float, b: float, interior_band: float | None = 0.75
) -> float:
    """Max relative L2 residual of dv/dt = (S+A)v + (a+ib)(V v + e^phi F), v = e^phi u.

    The spatial quadrature is restricted to |x|_inf <= interior_band * L by
    default: the weighted field's periodic extension jumps at the box seam,
    and the resulting Gibbs ring is a torus artifact, not a defect of the
    conjugation identity being checked.
    """
    system = traj.system
    grid = traj.grid
    n = len(traj.times)
    if n < 3:
        raise MonitorError("need at least 3 snapshots")
    if interior_band is None:
        mask = np.ones(grid.shape)
    else:
        sel = np.ones(grid.shape, dtype=bool)
        for m in meshes(grid):
            sel &= np.abs(m) <= interior_band * grid.half_width
        mask = sel.astype(float)
    worst = 0.0
    weights = [np.exp(wspec.exponent(grid, float(t))) for t in traj.times]
    vs = [weights[k] * traj.values[k] for k in range(n)]
    for k in range(1, n - 1):
        t = float(traj.times[k])
        h1 = traj.times[k + 1] - traj.times[k - 1]
        dvdt = (vs[k + 1] - vs[k - 1]) / h1
        vf = SampledComplexField(grid, vs[k])
        sv = conjugated_apply(vf, wspec, system, a, b, t, "S").values
        av = conjugated_apply(vf, wspec, system, a, b, t, "A").values
        rhs_vals = sv + av
        pot = np.zeros(grid.shape, dtype=complex)
        if system.v1 is not None:
            pot = pot + system.v1
        if system.v2_of_t is not None:
            pot = pot + system.v2_of_t(t)
        rhs_vals = rhs_vals + (a + 1j * b) * (pot * vs[k])
        if system.f_of_t is not None:
            rhs_vals = rhs_vals + (a + 1j * b) * weights[k] * system.f_of_t(t)
        num = l2_norm_values(mask * (dvdt - rhs_vals), grid)
        den = l2_norm_values(mask * dvdt, grid)
        worst = max(worst, num / den if den > 0 else num)
    return worst


def commutator_form(
    v: SampledComplexField,
    wspec: WeightSpec,
    system: PotentialSystem,
    a: float,
    b: float,
    t: float = 0.0,
    b_entries=None,
) -> tuple[float, dict]:
    """Quadratic form of (S_t + [S, A]) on v, term by term.

    The weight Hessian is hess_coeff * I and its bilaplacian vanishes for all
    supported kinds, so each term reduces to a plain grid quadrature.  The
    magnetic term contracts w^j = sum_k phi_k B_jk against the covariant
    gradient; A is static so its time-derivative terms drop.
    """
    grid = system.grid
    vol = grid.cell_volume
    gphi = wspec.grad(grid, t)
    ch = wspec.hess_coeff(t)
    grads = _covariant_gradient(v.values, system)
    absv2 = np.abs(v.values) ** 2

    grad_quad = 4.0 * ch * vol * float(sum(np.sum(np.abs(g) ** 2) for g in grads))
    bilap = 0.0
    weight_quad = 4.0 * ch * vol * float(np.sum(absv2 * sum(gp ** 2 for gp in gphi)))
    magnetic = 0.0
    if b_entries is not None:
        # contraction direction pinned against the operator-composition oracle:
        # the row-vector product sum_j phi_j B_jk, not the tangential-field one
        for k in range(grid.dim):
            w_k = sum(gphi[j] * b_entries[j][k] for j in range(grid.dim))
            magnetic += float(np.imag(vol * np.sum(np.conj(v.values) * w_k * grads[k])))
        magnetic *= 4.0
    commutator = (a ** 2 + b ** 2) * (grad_quad - bilap + weight_quad + magnetic)

    gpt = wspec.grad_phi_t(grid, t)
    cross_b = 2.0 * b * float(
        np.imag(vol * np.sum(np.conj(v.values) * sum(gpt[j] * grads[j] for j in range(grid.dim))))
    )
    cross_a = 2.0 * a * vol * float(np.sum(absv2 * sum(gphi[j] * gpt[j] for j in range(grid.dim))))
    st_tt = vol * float(np.sum(np.real(wspec.phi_tt(grid, t)) * absv2))
    total = commutator + 2.0 * cross_b + 2.0 * cross_a + st_tt
    breakdown = {
        "gradient_quadratic": (a ** 2 + b ** 2) * grad_quad,
        "bilaplacian": bilap,
        "weight_quadratic": (a ** 2 + b ** 2) * weight_quad,
        "magnetic": (a ** 2 + b ** 2) * magnetic,
        "time_cross_skew": 2.0 * cross_b,
        "time_cross_sym": 2.0 * cross_a,
        "phi_tt": st_tt,
    }
    return total, breakdown


@dataclass(frozen=True)
class DissipationPair:
    lhs: float
    rhs: float
    ratio: float
    m_t: float
    weight_rate_at_T: float


def dissipation_check(
    traj: Trajectory, gamma: float, t_final: float, truncation_radius: float | None = None
) -> DissipationPair:
    """Both sides of the weighted dissipation estimate at time T.

    lhs = e^{-M_T} || e^{rate(T)|x|^2} u(T) ||; rhs = || e^{gamma|x|^2} u(0) ||
    plus the time-integrated weighted forcing term.  Requires a > 0.

    truncation_radius flattens the final-time weight past that radius, which
    only weakens the left side (the flat continuation is below the Gaussian)
    while capping the exponent that would otherwise amplify the noise floor
    of the evolved field at the box corners.
    """
    params = traj.params
    if params.a <= 0:
        raise MonitorError("dissipation estimate requires a > 0")
    if gamma < 0:
        raise MonitorError("gamma must be nonnegative")
    grid = traj.grid
    idx = int(np.argmin(np.abs(traj.times - t_final)))
    if abs(traj.times[idx] - t_final) > 0.5 * params.dt * params.store_every + 1e-12:
        raise MonitorError(f"no snapshot near T={t_final}")
    wspec = WeightSpec("dissipation", gamma=gamma, a=params.a, b=params.b)
    r2 = radius_squared(grid)
    system = traj.system

    m_t = 0.0
    f_term = 0.0
    prev_t = None
    prev_m = prev_f = 0.0
    for k in range(idx + 1):
        t = float(traj.times[k])
        pot = np.zeros(grid.shape, dtype=complex)
        if system.v1 is not None:
            pot = pot + system.v1
        if system.v2_of_t is not None:
            pot = pot + system.v2_of_t(t)
        integrand_m = float(
            np.abs(params.a * np.maximum(pot.real, 0.0) - params.b * pot.imag).max()
        )
        if system.f_of_t is not None:
            wf = np.exp(wspec.rate(t) * r2) * system.f_of_t(t)
            integrand_f = l2_norm_values(wf, grid)
        else:
            integrand_f = 0.0
        if prev_t is not None:
            h = t - prev_t
            m_t += 0.5 * h * (prev_m + integrand_m)
            f_term += 0.5 * h * (prev_f + integrand_f)
        prev_t, prev_m, prev_f = t, integrand_m, integrand_f

    rate_T = wspec.rate(float(traj.times[idx]))
    r2_lhs = r2 if truncation_radius is None else np.minimum(r2, truncation_radius ** 2)
    lhs = float(np.exp(-m_t)) * l2_norm_values(np.exp(rate_T * r2_lhs) * traj.values[idx], grid)
    rhs = l2_norm_values(np.exp(gamma * r2) * traj.values[0], grid)
    rhs += float(np.sqrt(params.a ** 2 + params.b ** 2)) * f_term
    return DissipationPair(lhs=lhs, rhs=rhs, ratio=lhs / rhs, m_t=m_t, weight_rate_at_T=rate_T)


@dataclass(frozen=True)
class GradientBoundReport:
    lhs_gradient: float
    lhs_moment: float
    lhs: float
    bracket: float
    ratio: float


def gradient_bound_check(
    traj: Trajectory,
    wspec: WeightSpec,
    m1: float = 0.0,
    m_a: float = 0.0,
) -> GradientBoundReport:
    """Space-time weighted gradient/moment norms against the norm bracket.

    The universal constant in front of the bracket is unquantified, so the
    report carries the measured ratio for regression tracking rather than an
    asserted bound.  The t(1-t) damping uses time normalized to the horizon.
    """
    grid = traj.grid
    system = traj.system
    r2 = radius_squared(grid)
    n = len(traj.times)
    span = float(traj.times[-1] - traj.times[0])
    if span <= 0 or n < 3:
        raise MonitorError("trajectory too short for the space-time quadrature")
    grad_sq = np.zeros(n)
    mom_sq = np.zeros(n)
    sup_h = 0.0
    sup_f = 0.0
    for k in range(n):
        t = float(traj.times[k])
        that = (t - traj.times[0]) / span
        w = np.exp(wspec.exponent(grid, t))
        damping = that * (1.0 - that)
        grads = _covariant_gradient(traj.values[k], system)
        grad_sq[k] = damping * grid.cell_volume * float(np.sum(w ** 2 * sum(np.abs(g) ** 2 for g in grads)))
        rate = wspec.rate(t) if wspec.kind != "carleman" else wspec.mu
        mom_sq[k] = damping * rate ** 2 * grid.cell_volume * float(
            np.sum(w ** 2 * r2 * np.abs(traj.values[k]) ** 2)
        )
        sup_h = max(sup_h, l2_norm_values(w * traj.values[k], grid))
        if system.f_of_t is not None:
            sup_f = max(sup_f, l2_norm_values(w * system.f_of_t(t), grid))
    lhs_grad = float(np.sqrt(np.trapezoid(grad_sq, traj.times)))
    lhs_mom = float(np.sqrt(np.trapezoid(mom_sq, traj.times)))
    lhs = lhs_grad + lhs_mom
    bracket = (m1 + np.sqrt(m_a) + 1.0) * sup_h + sup_f
    return GradientBoundReport(
        lhs_gradient=lhs_grad,
        lhs_moment=lhs_mom,
        lhs=lhs,
        bracket=float(bracket),
        ratio=float(lhs / bracket) if bracket > 0 else float("inf"),
    )


__all__ = [
    "ConvexityReport",
    "ConvexityVerdict",
    "DissipationPair",
    "GradientBoundReport",
    "MonitorError",
    "WEIGHTED_BOUNDARY_LIMIT",
    "WeightOverflowError",
    "WeightSpec",
    "commutator_form",
    "conjugated_apply",
    "conjugation_residual",
    "convexity_check",
    "dissipation_check",
    "gradient_bound_check",
    "weighted_H",
]
