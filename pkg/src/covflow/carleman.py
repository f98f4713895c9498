"""Weighted space-time estimate verifier on compactly supported test functions.

The weight is exp(mu |x + R t(1-t) v|^2 - (1+eps) R^2 t(1-t)/(16 mu)); the
check compares (R/4) sqrt(eps/mu) ||W g|| against ||W (d_t - i Lap_A) g|| by
trapezoid quadrature in time and grid quadrature in space.

Two numerical safeguards matter here.  Exponents reach several hundred, so
both sides accumulate under a shared exponent shift.  And the operator is
local while the spectral Laplacian leaks ~1e-13 tails across the whole box;
the weight at the far corners can amplify those tails by e^{+100} or more, so
both integrands are masked to the known support of the cutoff construction.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cutoffs import radial_plateau, time_window
from .fields import PotentialSpec
from .grid import (
    GridSpec,
    SampledRealVectorField,
    meshes,
    radius_squared,
    wavenumber_multipliers,
)
from .evolve import PotentialSystem

MAX_SHIFTED_EXPONENT = 700.0
SUPPORT_PAD = 0.0  # support mask is exactly the cutoff support


class CarlemanError(ValueError):
    pass


def thread_cap() -> int:
    """Parallel width for independent sweep cells, from COVFLOW_THREADS."""
    raw = os.environ.get("COVFLOW_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise CarlemanError(f"COVFLOW_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise CarlemanError(f"COVFLOW_THREADS must be a positive integer, got {n}")
    return n


@dataclass(frozen=True)
class CarlemanParams:
    mu: float
    eps: float
    big_r: float
    v: tuple

    def __post_init__(self):
        if self.mu <= 0 or self.eps <= 0 or self.big_r <= 0:
            raise CarlemanError("mu, eps, R must be positive")
        vv = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(vv) - 1.0) > 1e-12:
            raise CarlemanError("drift direction v must be a unit vector")

    def admissible(self, sup_xtb: float) -> bool:
        return self.big_r > 8.0 * self.mu * self.eps ** (-0.5) * sup_xtb


def weight_exponent(grid: GridSpec, t: float, params: CarlemanParams) -> np.ndarray:
    xs = meshes(grid)
    vv = np.asarray(params.v, dtype=float)
    drift = params.big_r * t * (1.0 - t)
    shifted = sum((xs[j] + drift * vv[j]) ** 2 for j in range(grid.dim))
    return params.mu * shifted - (1.0 + params.eps) * params.big_r ** 2 * t * (1.0 - t) / (16.0 * params.mu)


def carleman_weight(x: np.ndarray, t: float, params: CarlemanParams) -> float:
    """exp of the moving-center exponent at a single point (overflow-guarded)."""
    x = np.asarray(x, dtype=float)
    vv = np.asarray(params.v, dtype=float)
    drift = params.big_r * t * (1.0 - t)
    expo = params.mu * float(np.sum((x + drift * vv) ** 2))
    expo -= (1.0 + params.eps) * params.big_r ** 2 * t * (1.0 - t) / (16.0 * params.mu)
    if expo > MAX_SHIFTED_EXPONENT:
        raise CarlemanError(f"weight exponent {expo:.3g} overflows; shift the evaluation")
    return float(np.exp(expo))


@dataclass(frozen=True)
class TestFunctionSpec:
    """Compactly supported space-time test function g = theta_M * eta * core."""

    spatial: str = "gaussian_bump"  # or "modulated_bump"
    center: tuple = ()
    width: float = 1.0
    wavevector: tuple = ()
    cutoff_m: float = 2.0
    cutoff_r_time: float = 8.0
    time_profile: str = "one"  # or "sine"

    def __post_init__(self):
        if self.spatial not in ("gaussian_bump", "modulated_bump"):
            raise CarlemanError(f"unknown spatial kind {self.spatial!r}")
        if self.width <= 0 or self.cutoff_m <= 0:
            raise CarlemanError("width and cutoff_m must be positive")
        if self.cutoff_r_time <= 2.0:
            raise CarlemanError("cutoff_r_time must exceed 2")
        if self.time_profile not in ("one", "sine"):
            raise CarlemanError(f"unknown time profile {self.time_profile!r}")


@dataclass
class GFamily:
    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # (n_times, *grid.shape)
    support: np.ndarray  # spatial bool mask
    spec: TestFunctionSpec


def cutoff_factory(tspec: TestFunctionSpec, grid: GridSpec, times: np.ndarray) -> GFamily:
    """Sampled g(x, t_k) with its exact spatial support mask.

    The spatial plateau radius is cutoff_m (support 2*cutoff_m), which must
    fit inside 0.9 of the box so nothing touches the periodic seam.
    """
    if 2.0 * tspec.cutoff_m > 0.9 * grid.half_width:
        raise CarlemanError("cutoff support 2M exceeds 0.9 of the box half-width")
    xs = meshes(grid)
    c = np.asarray(tspec.center if tspec.center else (0.0,) * grid.dim, dtype=float)
    if c.shape != (grid.dim,):
        raise CarlemanError("center dimension mismatch")
    r = np.sqrt(radius_squared(grid))
    theta = np.where(
        r <= tspec.cutoff_m,
        1.0,
        np.where(r >= 2.0 * tspec.cutoff_m, 0.0, radial_plateau(r, tspec.cutoff_m, 2.0 * tspec.cutoff_m)),
    )
    sq = sum((xs[j] - c[j]) ** 2 for j in range(grid.dim))
    core = np.exp(-sq / (2.0 * tspec.width ** 2)).astype(complex)
    if tspec.spatial == "modulated_bump":
        k = np.asarray(tspec.wavevector if tspec.wavevector else (1.0,) + (0.0,) * (grid.dim - 1))
        core = core * np.exp(1j * sum(k[j] * xs[j] for j in range(grid.dim)))
    spatial = theta * core
    times = np.asarray(times, dtype=float)
    eta = time_window(times, tspec.cutoff_r_time)
    if tspec.time_profile == "sine":
        eta = eta * np.sin(np.pi * times)
    values = eta[:, None, None] * spatial[None] if grid.dim == 2 else eta[:, None, None, None] * spatial[None]
    return GFamily(grid=grid, times=times, values=values, support=theta > 0.0, spec=tspec)


@dataclass(frozen=True)
class CarlemanSides:
    lhs: float
    rhs: float
    ratio: float
    admissible: bool
    sup_xtb: float


def carleman_sides(
    gfam: GFamily,
    a_field: SampledRealVectorField | None,
    params: CarlemanParams,
    sup_xtb: float = 0.0,
) -> CarlemanSides:
    """Both sides of the weighted estimate on a sampled test-function family.

    d_t g is a centered difference on the family's own time samples; Lap_A g
    is spectral.  Raises on support leakage near the periodic seam.
    """
    grid = gfam.grid
    if len(np.asarray(params.v)) != grid.dim:
        raise CarlemanError("drift dimension mismatch")
    seam = np.zeros(grid.shape, dtype=bool)
    for m in meshes(grid):
        seam |= np.abs(m) > grid.half_width - 2.0 * grid.spacing
    if np.any(np.abs(gfam.values[:, seam]) > 0):
        raise CarlemanError("test function support leaks within 2h of the boundary")
    n_t = len(gfam.times)
    if n_t < 5:
        raise CarlemanError("need at least 5 time samples")
    dt = np.diff(gfam.times)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * dt[0]):
        raise CarlemanError("time samples must be uniform")
    h_t = float(dt[0])
    if abs(gfam.values[0]).max() > 0 or abs(gfam.values[-1]).max() > 0:
        raise CarlemanError("test function must vanish at t=0 and t=1")

    system = PotentialSystem(grid, a_field)
    mask = gfam.support
    # shared exponent shift over the masked support, keeping exp() in range
    e_max = -np.inf
    for i, t in enumerate(gfam.times):
        e = weight_exponent(grid, float(t), params)
        e_max = max(e_max, float(e[mask].max()))
    lhs_sq = 0.0
    rhs_sq = 0.0
    w_t = np.full(n_t, h_t)
    w_t[0] = w_t[-1] = 0.5 * h_t
    for i, t in enumerate(gfam.times):
        e = weight_exponent(grid, float(t), params) - e_max
        w2 = np.where(mask, np.exp(2.0 * np.minimum(e, 0.0)), 0.0)
        if i == 0:
            dgdt = (gfam.values[1] - gfam.values[0]) / h_t
        elif i == n_t - 1:
            dgdt = (gfam.values[-1] - gfam.values[-2]) / h_t
        else:
            dgdt = (gfam.values[i + 1] - gfam.values[i - 1]) / (2.0 * h_t)
        op = dgdt - 1j * system.covariant_terms(gfam.values[i])
        lhs_sq += w_t[i] * grid.cell_volume * float(np.sum(w2 * np.abs(gfam.values[i]) ** 2))
        rhs_sq += w_t[i] * grid.cell_volume * float(np.sum(w2 * np.abs(op) ** 2))
    shift = float(np.exp(min(e_max, MAX_SHIFTED_EXPONENT / 2.0)))
    prefactor = (params.big_r / 4.0) * np.sqrt(params.eps / params.mu)
    lhs = prefactor * np.sqrt(lhs_sq) * shift
    rhs = np.sqrt(rhs_sq) * shift
    if rhs_sq == 0.0:
        ratio = 0.0
    else:
        ratio = float(prefactor * np.sqrt(lhs_sq / rhs_sq))
    return CarlemanSides(
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=ratio,
        admissible=params.admissible(sup_xtb),
        sup_xtb=sup_xtb,
    )


@dataclass(frozen=True)
class SweepRow:
    case_id: str
    mu: float
    eps: float
    big_r: float
    v_index: int
    sup_xtb: float
    admissible: bool
    lhs: float
    rhs: float
    ratio: float


def sweep(
    grid: GridSpec,
    tspec: TestFunctionSpec,
    mus,
    rs,
    eps: float,
    v_index: int,
    n_times: int,
    a_spec: PotentialSpec | None = None,
    sup_xtb: float = 0.0,
) -> list[SweepRow]:
    """Evaluate the estimate on the (mu, R) product grid; cells run concurrently
    up to COVFLOW_THREADS, with results assembled in deterministic order.
    """
    from .fields import eval_potential

    times = np.linspace(0.0, 1.0, n_times)
    a_field = None
    if a_spec is not None and a_spec.kind != "zero":
        a_field = eval_potential(a_spec, grid)
    v = tuple(1.0 if j == v_index else 0.0 for j in range(grid.dim))
    cells = [(mu, r) for mu in mus for r in rs]

    def run(cell):
        mu, r = cell
        params = CarlemanParams(mu=mu, eps=eps, big_r=r, v=v)
        gfam = cutoff_factory(tspec, grid, times)
        sides = carleman_sides(gfam, a_field, params, sup_xtb)
        return sides

    width = min(thread_cap(), len(cells))
    if width > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    rows = []
    for (mu, r), sides in zip(cells, results):
        rows.append(
            SweepRow(
                case_id=f"mu{mu:g}_R{r:g}_eps{eps:g}",
                mu=mu,
                eps=eps,
                big_r=r,
                v_index=v_index,
                sup_xtb=sup_xtb,
                admissible=sides.admissible,
                lhs=sides.lhs,
                rhs=sides.rhs,
                ratio=sides.ratio,
            )
        )
    return rows


__all__ = [
    "CarlemanError",
    "CarlemanParams",
    "CarlemanSides",
    "GFamily",
    "SweepRow",
    "TestFunctionSpec",
    "carleman_sides",
    "carleman_weight",
    "cutoff_factory",
    "sweep",
    "thread_cap",
    "weight_exponent",
]
