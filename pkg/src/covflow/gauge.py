"""Transversal (Cronstrom) gauge reduction and its verification.

The reduced potential is computed from the ray integral of the tangential
field, A~(x) = -int_0^1 Psi(sx) ds, never from A - grad(chi): differentiating
the non-periodic phase spectrally would pollute the whole box.  The
A - grad(chi) route survives only as a cross-check on interior points, with
grad(chi) obtained by quadrature of the differentiated phase formula
phi_j(x) = int_0^1 [A^j(sx) + s sum_k x_k dA^k/dx_j(sx)] ds.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .fields import PotentialSpec, jacobian_at, magnetic_tensor, potential_at, psi_at, psi_field
from .grid import (
    GridError,
    GridSpec,
    SampledComplexField,
    SampledRealVectorField,
    evaluate_scaled,
    meshes,
    radius_squared,
    spectral_gradient_values,
)

DEFAULT_NODES = 32
INTERIOR_BAND = 0.75  # cross-checks run on |x|_inf <= INTERIOR_BAND * L


class GaugeError(ValueError):
    pass


@functools.lru_cache(maxsize=16)
def _gl01(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1]."""
    if k < 2:
        raise GaugeError("quadrature order K must be at least 2")
    nodes, weights = np.polynomial.legendre.leggauss(k)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def _segments(pts: np.ndarray, k: int, core_radius: float):
    """Quadrature nodes/weights along each ray, split at the core crossing.

    Yields (s, w) pairs of shape (npts, k); splitting keeps the integrand
    piecewise smooth for core-regularized kinds, preserving GL accuracy.
    """
    nodes, weights = _gl01(k)
    npts = pts.shape[0]
    if core_radius <= 0.0:
        yield np.broadcast_to(nodes, (npts, k)), np.broadcast_to(weights, (npts, k))
        return
    r = np.linalg.norm(pts, axis=-1)
    s_star = np.clip(core_radius / np.maximum(r, 1e-300), 0.0, 1.0)[:, None]
    yield s_star * nodes, s_star * weights
    yield s_star + (1.0 - s_star) * nodes, (1.0 - s_star) * weights


def radial_integral(eval_fn, pts: np.ndarray, k: int = DEFAULT_NODES, core_radius: float = 0.0) -> np.ndarray:
    """Gauss-Legendre quadrature of s -> eval_fn(s*x) over [0, 1], per point.

    pts has shape (npts, dim); eval_fn maps (..., dim) points to (..., dim)
    vectors.  Returns (npts, dim).
    """
    pts = np.asarray(pts, dtype=float)
    out = np.zeros_like(pts)
    for s, w in _segments(pts, k, core_radius):
        vals = eval_fn(s[..., None] * pts[:, None, :])
        if not np.all(np.isfinite(vals)):
            raise GaugeError("ray integrand evaluated to a non-finite value")
        out += np.einsum("pk,pkd->pd", w, vals)
    return out


def _grid_points(grid: GridSpec) -> np.ndarray:
    return np.stack([m.ravel() for m in meshes(grid)], axis=-1)


def _sampled_ray_integral(field: SampledRealVectorField, k: int) -> np.ndarray:
    """Ray integral of a grid-sampled field via scaled trigonometric evaluation."""
    nodes, weights = _gl01(k)
    grid = field.grid
    out = np.zeros((grid.dim,) + grid.shape)
    for s, w in zip(nodes, weights):
        for j, comp in enumerate(field.components):
            out[j] += w * evaluate_scaled(comp.astype(complex), grid, grid, s).real
    return out


def cronstrom_phase(spec: PotentialSpec, grid: GridSpec, k: int = DEFAULT_NODES) -> np.ndarray:
    """chi(x) = x . int_0^1 A(sx) ds at every grid point."""
    spec.check_grid(grid)
    if spec.kind == "custom":
        from .fields import eval_potential

        integ = _sampled_ray_integral(eval_potential(spec, grid), k)
        return sum(m * integ[j] for j, m in enumerate(meshes(grid)))
    pts = _grid_points(grid)
    rho0 = spec.core_radius(grid)
    integ = radial_integral(lambda q: potential_at(spec, q, rho0), pts, k, rho0)
    chi = np.sum(pts * integ, axis=-1)
    return chi.reshape(grid.shape)


def phase_gradient_ray(spec: PotentialSpec, grid: GridSpec, k: int = DEFAULT_NODES) -> SampledRealVectorField:
    """grad(chi) by ray quadrature of the differentiated phase formula."""
    spec.check_grid(grid)
    if spec.kind == "custom":
        raise GaugeError("ray-form phase gradient needs closed-form Jacobians")
    pts = _grid_points(grid)
    rho0 = spec.core_radius(grid)
    out = np.zeros_like(pts)
    for s, w in _segments(pts, k, rho0):
        q = s[..., None] * pts[:, None, :]
        a = potential_at(spec, q, rho0)
        jac = jacobian_at(spec, q, rho0)
        # integrand_j = A^j(sx) + s * sum_k x_k dA^k/dx_j (sx)
        term = np.einsum("pk,pc,pkcj->pkj", s, pts, jac)
        out += np.einsum("pk,pkj->pj", w, a + term)
    comps = tuple(out[:, j].reshape(grid.shape) for j in range(grid.dim))
    return SampledRealVectorField(grid, comps)


@dataclass(frozen=True)
class GaugeTransform:
    phase: np.ndarray
    transformed_potential: SampledRealVectorField
    quadrature_nodes: int
    transversality_defect: float
    dA_transversality_defect: float

    def __post_init__(self):
        if self.quadrature_nodes < 2:
            raise GaugeError("quadrature_nodes must be at least 2")
        if self.transversality_defect < 0 or self.dA_transversality_defect < 0:
            raise GaugeError("defects must be nonnegative")


def interior_mask(grid: GridSpec, core_radius: float = 0.0) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for m in meshes(grid):
        mask &= np.abs(m) <= INTERIOR_BAND * grid.half_width
    if core_radius > 0.0:
        mask &= radius_squared(grid) >= (2.0 * core_radius) ** 2
    return mask


def cronstrom_potential(spec: PotentialSpec, grid: GridSpec, k: int = DEFAULT_NODES) -> GaugeTransform:
    """Compute the transversal potential and its transversality certificates."""
    spec.check_grid(grid)
    chi = cronstrom_phase(spec, grid, k)
    rho0 = spec.core_radius(grid)
    if spec.kind == "custom":
        b = magnetic_tensor(spec, grid, mode="spectral")
        integ = _sampled_ray_integral(psi_field(b), k)
        comps = tuple(-integ[j] for j in range(grid.dim))
    else:
        pts = _grid_points(grid)
        integ = radial_integral(lambda q: psi_at(spec, q, rho0), pts, k, rho0)
        comps = tuple(-integ[:, j].reshape(grid.shape) for j in range(grid.dim))
    a_tilde = SampledRealVectorField(grid, comps)

    xs = meshes(grid)
    x_dot = sum(xs[j] * a_tilde.components[j] for j in range(grid.dim))
    transversality = float(np.abs(x_dot).max())

    # x . (x^t DA~) with DA~ spectral; measured on the interior because the
    # reduced potential is generally not box-periodic
    grads = [spectral_gradient_values(c.astype(complex), grid) for c in a_tilde.components]
    acc = np.zeros(grid.shape)
    for j in range(grid.dim):
        xt_da_j = sum(xs[kk] * grads[j][kk].real for kk in range(grid.dim))
        acc += xs[j] * xt_da_j
    mask = interior_mask(grid, rho0)
    da_defect = float(np.abs(acc[mask]).max()) if mask.any() else 0.0

    return GaugeTransform(
        phase=chi,
        transformed_potential=a_tilde,
        quadrature_nodes=k,
        transversality_defect=transversality,
        dA_transversality_defect=da_defect,
    )


def apply_gauge(u: SampledComplexField, chi: np.ndarray, sign: int = 1) -> SampledComplexField:
    """Pointwise multiplication by exp(i*sign*chi)."""
    if sign not in (1, -1):
        raise GaugeError("sign must be +1 or -1")
    chi = np.asarray(chi, dtype=float)
    if chi.shape != u.grid.shape:
        raise GridError("phase shape does not match grid")
    return SampledComplexField(u.grid, np.exp(1j * sign * chi) * u.values)


def cross_identity_check(spec: PotentialSpec, grid: GridSpec, k: int = DEFAULT_NODES) -> float:
    """max over interior points of |A - grad(chi) - A~|.

    Verifies that the two constructions of the transversal potential (the
    subtracted gradient and the ray integral of the tangential field) agree;
    for too-singular fields the defect is O(1), which is the expected failure.
    """
    spec.check_grid(grid)
    from .fields import eval_potential

    a = eval_potential(spec, grid)
    gchi = phase_gradient_ray(spec, grid, k)
    gt = cronstrom_potential(spec, grid, k)
    mask = interior_mask(grid, spec.core_radius(grid))
    if not mask.any():
        return 0.0
    diff2 = np.zeros(grid.shape)
    for j in range(grid.dim):
        diff2 += (a.components[j] - gchi.components[j] - gt.transformed_potential.components[j]) ** 2
    return float(np.sqrt(diff2[mask]).max())


__all__ = [
    "DEFAULT_NODES",
    "GaugeError",
    "GaugeTransform",
    "apply_gauge",
    "cronstrom_phase",
    "cronstrom_potential",
    "cross_identity_check",
    "interior_mask",
    "phase_gradient_ray",
    "radial_integral",
]
