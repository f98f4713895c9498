"""Method-of-lines integrator for du/dt = (a+ib)(Lap_A u + V1 u + V2 u + F).

Space is fully spectral; time is classical RK4 with an a-priori stability
bound that is checked, never silently clamped.  The covariant Laplacian is
expanded as Lap u - i(div A)u - 2i A.grad u - |A|^2 u with spectral Lap,
grad, div and pointwise multiplications.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    BOUNDARY_MASS_LIMIT,
    GridSpec,
    SampledComplexField,
    SampledRealVectorField,
    boundary_mass_fraction,
    l2_norm_values,
    wavenumber_multipliers,
)

STABILITY_MARGIN = 2.5  # |a+ib| * k_max^2 * dt must stay below this (RK4 region with slack)


class EvolveError(RuntimeError):
    pass


class StabilityError(EvolveError):
    pass


class BoundaryMassError(EvolveError):
    pass


@dataclass(frozen=True)
class FlowParams:
    """Dissipation/rotation pair and time-stepping controls."""

    a: float
    b: float
    dt: float
    t_end: float
    store_every: int = 1

    def __post_init__(self):
        if self.a < 0:
            raise EvolveError(f"dissipation a must be nonnegative, got {self.a}")
        if self.a + abs(self.b) <= 0:
            raise EvolveError("a+ib must be nonzero")
        if self.dt <= 0:
            raise EvolveError("dt must be positive")
        if not 0.0 < self.t_end <= 1.0:
            raise EvolveError(f"t_end must lie in (0, 1], got {self.t_end}")
        if self.store_every < 1:
            raise EvolveError("store_every must be a positive integer")

    @property
    def coefficient(self) -> complex:
        return self.a + 1j * self.b


def stability_limit(grid: GridSpec, a: float, b: float) -> float:
    """Largest admissible dt: STABILITY_MARGIN / (|a+ib| k_max^2)."""
    k_max_sq = grid.dim * (np.pi * grid.points_per_axis / (2.0 * grid.half_width)) ** 2
    return STABILITY_MARGIN / (abs(a + 1j * b) * k_max_sq)


class PotentialSystem:
    """Static magnetic/scalar data plus time-evaluable V2 and F.

    v2_of_t / f_of_t, when given, are callables t -> complex samples; they are
    evaluated at RK substage times, so the harness adds no interpolation error.
    """

    def __init__(
        self,
        grid: GridSpec,
        a_field: SampledRealVectorField | None = None,
        v1: np.ndarray | None = None,
        v2_of_t=None,
        f_of_t=None,
    ):
        self.grid = grid
        self.a_field = a_field
        self.v1 = None if v1 is None else np.asarray(v1, dtype=float)
        self.v2_of_t = v2_of_t
        self.f_of_t = f_of_t
        if a_field is not None:
            if a_field.grid != grid:
                raise EvolveError("potential grid does not match")
            k_axes, _ = wavenumber_multipliers(grid)
            div = np.zeros(grid.shape, dtype=complex)
            for j, comp in enumerate(a_field.components):
                div += 1j * k_axes[j] * np.fft.fftn(comp)
            self.div_a = np.fft.ifftn(div).real
            self.a_sq = sum(c ** 2 for c in a_field.components)
        else:
            self.div_a = None
            self.a_sq = None
        if self.v1 is not None and self.v1.shape != grid.shape:
            raise EvolveError("V1 shape does not match grid")

    def covariant_terms(self, values: np.ndarray) -> np.ndarray:
        """Lap_A applied to raw samples."""
        k_axes, k2 = wavenumber_multipliers(self.grid)
        fhat = np.fft.fftn(values)
        out = np.fft.ifftn(-k2 * fhat)
        if self.a_field is not None:
            adv = np.zeros(self.grid.shape, dtype=complex)
            for j, comp in enumerate(self.a_field.components):
                adv += comp * np.fft.ifftn(1j * k_axes[j] * fhat)
            out = out - 2j * adv - (1j * self.div_a + self.a_sq) * values
        return out

    def rhs_values(self, values: np.ndarray, a: float, b: float, t: float) -> np.ndarray:
        acc = self.covariant_terms(values)
        if self.v1 is not None:
            acc = acc + self.v1 * values
        if self.v2_of_t is not None:
            acc = acc + self.v2_of_t(t) * values
        if self.f_of_t is not None:
            acc = acc + self.f_of_t(t)
        return (a + 1j * b) * acc


def rhs(u: SampledComplexField, system: PotentialSystem, a: float, b: float, t: float = 0.0) -> SampledComplexField:
    """The expanded right-hand side as a field."""
    if u.grid != system.grid:
        raise EvolveError("field grid does not match system grid")
    return SampledComplexField(u.grid, system.rhs_values(u.values, a, b, t))


@dataclass
class Trajectory:
    """Stored snapshots of one evolve call; grids are identical throughout."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # shape (n_stored, *grid.shape)
    params: FlowParams
    norms: np.ndarray
    boundary_fractions: np.ndarray
    system: PotentialSystem = field(repr=False, default=None)

    def field_at(self, index: int) -> SampledComplexField:
        return SampledComplexField(self.grid, self.values[index])

    def interp_values(self, t: float) -> np.ndarray:
        """Cubic Lagrange interpolation in time between stored snapshots."""
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise EvolveError(f"time {t} outside stored range [{ts[0]}, {ts[-1]}]")
        if len(ts) < 4:
            raise EvolveError("need at least 4 snapshots for cubic interpolation")
        i = int(np.searchsorted(ts, t))
        lo = min(max(i - 2, 0), len(ts) - 4)
        idx = range(lo, lo + 4)
        out = np.zeros(self.grid.shape, dtype=complex)
        for j in idx:
            w = 1.0
            for m in idx:
                if m != j:
                    w *= (t - ts[m]) / (ts[j] - ts[m])
            out += w * self.values[j]
        return out


def _rk4_step(values: np.ndarray, system: PotentialSystem, a: float, b: float, t: float, dt: float) -> np.ndarray:
    k1 = system.rhs_values(values, a, b, t)
    k2 = system.rhs_values(values + 0.5 * dt * k1, a, b, t + 0.5 * dt)
    k3 = system.rhs_values(values + 0.5 * dt * k2, a, b, t + 0.5 * dt)
    k4 = system.rhs_values(values + dt * k3, a, b, t + dt)
    return values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(
    u0: SampledComplexField,
    system: PotentialSystem,
    params: FlowParams,
    check_boundary: bool = True,
) -> Trajectory:
    """March u0 to t_end with RK4; snapshots every store_every steps.

    Rejects unstable dt up front and aborts on a boundary-mass breach, since
    either one invalidates every inequality measured downstream.
    """
    if u0.grid != system.grid:
        raise EvolveError("initial field grid does not match system grid")
    limit = stability_limit(u0.grid, params.a, params.b)
    if params.dt > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={params.dt:g} exceeds the stability bound {limit:g} "
            f"for |a+ib|={abs(params.coefficient):g} on this grid"
        )
    n_steps = int(round(params.t_end / params.dt))
    if n_steps < 1 or abs(n_steps * params.dt - params.t_end) > 0.5 * params.dt:
        raise EvolveError("t_end is not reachable within dt/2 with this step size")

    def _checked_fraction(vals: np.ndarray, t: float) -> float:
        frac = boundary_mass_fraction(vals, u0.grid)
        if check_boundary and frac > BOUNDARY_MASS_LIMIT:
            raise BoundaryMassError(
                f"boundary mass fraction {frac:.3e} exceeds {BOUNDARY_MASS_LIMIT:g} at t={t:g}; "
                "the box is too small for this configuration"
            )
        return frac

    values = u0.values.copy()
    times = [0.0]
    stored = [values.copy()]
    norms = [l2_norm_values(values, u0.grid)]
    fracs = [_checked_fraction(values, 0.0)]
    for step in range(1, n_steps + 1):
        t = (step - 1) * params.dt
        values = _rk4_step(values, system, params.a, params.b, t, params.dt)
        if step % params.store_every == 0 or step == n_steps:
            t_now = step * params.dt
            times.append(t_now)
            stored.append(values.copy())
            norms.append(l2_norm_values(values, u0.grid))
            fracs.append(_checked_fraction(values, t_now))
    return Trajectory(
        grid=u0.grid,
        times=np.asarray(times),
        values=np.asarray(stored),
        params=params,
        norms=np.asarray(norms),
        boundary_fractions=np.asarray(fracs),
        system=system,
    )


def heat_semigroup(values: np.ndarray, system: PotentialSystem, duration: float) -> np.ndarray:
    """Apply the smoothing flow dw/dtau = Lap_A w + V1 w for the given duration.

    Used for the auxiliary regularization construction; V2/F are ignored.
    """
    if duration < 0:
        raise EvolveError("duration must be nonnegative")
    if duration == 0.0:
        return values.copy()
    aux = PotentialSystem(system.grid, system.a_field, system.v1)
    limit = stability_limit(system.grid, 1.0, 0.0)
    n = max(1, int(np.ceil(duration / limit)))
    dt = duration / n
    out = values.copy()
    for i in range(n):
        out = _rk4_step(out, aux, 1.0, 0.0, i * dt, dt)
    return out


def gauge_equivariance_test(
    u0: SampledComplexField,
    system: PotentialSystem,
    chi: np.ndarray,
    grad_chi: SampledRealVectorField,
    params: FlowParams,
) -> float:
    """Relative L2 distance at t_end between the two routes around the square:
    evolve(e^{i chi} u0 with A + grad chi) versus e^{i chi} evolve(u0 with A).
    """
    from .gauge import apply_gauge

    grid = u0.grid
    base = system.a_field.components if system.a_field is not None else (0.0,) * grid.dim
    shifted = SampledRealVectorField(
        grid, tuple(np.asarray(base[j]) + grad_chi.components[j] for j in range(grid.dim))
    )
    sys2 = PotentialSystem(grid, shifted, system.v1, system.v2_of_t, system.f_of_t)
    traj_a = evolve(u0, system, params)
    traj_b = evolve(apply_gauge(u0, chi), sys2, params)
    ref = apply_gauge(traj_a.field_at(-1), chi)
    diff = l2_norm_values(traj_b.values[-1] - ref.values, grid)
    return diff / l2_norm_values(ref.values, grid)


__all__ = [
    "BoundaryMassError",
    "EvolveError",
    "FlowParams",
    "PotentialSystem",
    "StabilityError",
    "Trajectory",
    "evolve",
    "gauge_equivariance_test",
    "heat_semigroup",
    "rhs",
    "stability_limit",
]
