"""Magnetic potential zoo, derived tensors, and hypothesis constants.

Each built-in kind carries closed forms for the potential A, its Jacobian,
the antisymmetric tensor B_jk = dA^k/dx_j - dA^j/dx_k, and the tangential
field Psi^j = sum_k x_k B_jk.  Singular kinds are core-regularized by
|x|^2 -> max(|x|^2, rho0^2); the regularization only exists to keep grid
samples bounded, so hypothesis suprema exclude the 2*rho0 core for them.

The vortex kind (aharonov_bohm_2d) is special: away from the origin its
field vanishes identically, so the closed-form Psi used by ray integrals is
exactly zero even though the sampled tensor carries the regularized core.
That mismatch is the point: it is the standard example where the transversal
gauge construction returns zero for a nonzero potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridError,
    GridSpec,
    SampledRealVectorField,
    meshes,
    radius_squared,
    spectral_gradient_values,
)

ZOO_KINDS = (
    "zero",
    "pure_gauge",
    "constant_field",
    "block_field_3d",
    "block_matrix_3d",
    "aharonov_bohm_2d",
)
CORE_KINDS = ("block_field_3d", "block_matrix_3d", "aharonov_bohm_2d")


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative magnetic potential.

    kind: one of ZOO_KINDS or "custom"; b0 is the constant-field strength,
    rho0 the core radius (None = 4h at evaluation time), gauge_tag selects
    the pure-gauge generator, components holds samples for "custom".
    """

    kind: str
    b0: float = 1.0
    rho0: float | None = None
    gauge_tag: str = "bilinear"
    components: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ZOO_KINDS + ("custom",):
            raise FieldError(f"unknown potential kind {self.kind!r}")
        if not np.isfinite(self.b0):
            raise FieldError("b0 must be finite")
        if self.rho0 is not None and self.rho0 <= 0:
            raise FieldError("rho0 must be positive")
        if self.kind == "pure_gauge" and self.gauge_tag not in ("bilinear", "radial"):
            raise FieldError(f"unknown pure_gauge tag {self.gauge_tag!r}")
        if self.kind == "custom" and self.components is None:
            raise FieldError("custom kind requires sampled components")

    def required_dim(self) -> int | None:
        if self.kind in ("block_field_3d", "block_matrix_3d"):
            return 3
        if self.kind == "aharonov_bohm_2d":
            return 2
        return None

    def core_radius(self, grid: GridSpec) -> float:
        if self.kind not in CORE_KINDS:
            return 0.0
        return self.rho0 if self.rho0 is not None else 4.0 * grid.spacing

    def check_grid(self, grid: GridSpec) -> None:
        need = self.required_dim()
        if need is not None and grid.dim != need:
            raise FieldError(f"kind {self.kind!r} requires dim={need}, grid has dim={grid.dim}")
        if self.kind == "custom" and np.asarray(self.components[0]).shape != grid.shape:
            raise FieldError("custom components do not match grid shape")


def _split(pts: np.ndarray) -> list[np.ndarray]:
    return [pts[..., j] for j in range(pts.shape[-1])]


def potential_at(spec: PotentialSpec, pts: np.ndarray, rho0: float) -> np.ndarray:
    """Closed-form A at arbitrary points, shape (..., dim) -> (..., dim)."""
    pts = np.asarray(pts, dtype=float)
    dim = pts.shape[-1]
    out = np.zeros_like(pts)
    if spec.kind == "zero":
        return out
    if spec.kind == "pure_gauge":
        x = _split(pts)
        if spec.gauge_tag == "bilinear":
            out[..., 0] = x[1]
            out[..., 1] = x[0]
        else:  # radial: generator |x|^2/2
            for j in range(dim):
                out[..., j] = x[j]
        return out
    if spec.kind == "constant_field":
        x = _split(pts)
        out[..., 0] = -0.5 * spec.b0 * x[1]
        out[..., 1] = 0.5 * spec.b0 * x[0]
        return out
    r2 = np.sum(pts ** 2, axis=-1)
    m = np.maximum(r2, rho0 ** 2)
    if spec.kind == "aharonov_bohm_2d":
        out[..., 0] = -pts[..., 1] / m
        out[..., 1] = pts[..., 0] / m
        return out
    if spec.kind == "block_field_3d":
        out[..., 0] = pts[..., 0] * pts[..., 2] / m
        out[..., 1] = pts[..., 1] * pts[..., 2] / m
        out[..., 2] = -(pts[..., 0] ** 2 + pts[..., 1] ** 2) / m
        return out
    if spec.kind == "block_matrix_3d":
        r = np.sqrt(np.maximum(r2, 1e-300))
        w = np.where(r >= rho0, (0.5 + np.log(np.maximum(r, rho0) / rho0)) / m, 0.5 / rho0 ** 2)
        out[..., 0] = -pts[..., 1] * w
        out[..., 1] = pts[..., 0] * w
        return out
    raise FieldError(f"no closed form for kind {spec.kind!r}")


def psi_at(spec: PotentialSpec, pts: np.ndarray, rho0: float) -> np.ndarray:
    """Closed-form tangential field Psi^j = sum_k x_k B_jk at arbitrary points."""
    pts = np.asarray(pts, dtype=float)
    out = np.zeros_like(pts)
    if spec.kind in ("zero", "pure_gauge", "aharonov_bohm_2d"):
        return out
    if spec.kind == "constant_field":
        out[..., 0] = spec.b0 * pts[..., 1]
        out[..., 1] = -spec.b0 * pts[..., 0]
        return out
    r2 = np.sum(pts ** 2, axis=-1)
    if spec.kind == "block_field_3d":
        inside = r2 < rho0 ** 2
        m = np.where(inside, rho0 ** 2 / 3.0, np.maximum(r2, 1e-300))
        out[..., 0] = -pts[..., 0] * pts[..., 2] / m
        out[..., 1] = -pts[..., 1] * pts[..., 2] / m
        out[..., 2] = (pts[..., 0] ** 2 + pts[..., 1] ** 2) / m
        return out
    if spec.kind == "block_matrix_3d":
        m = np.maximum(r2, rho0 ** 2)
        out[..., 0] = pts[..., 1] / m
        out[..., 1] = -pts[..., 0] / m
        return out
    raise FieldError(f"no closed form for kind {spec.kind!r}")


def jacobian_at(spec: PotentialSpec, pts: np.ndarray, rho0: float) -> np.ndarray:
    """Closed-form Jacobian, out[..., j, k] = dA^j/dx_k."""
    pts = np.asarray(pts, dtype=float)
    dim = pts.shape[-1]
    out = np.zeros(pts.shape[:-1] + (dim, dim))
    if spec.kind == "zero":
        return out
    if spec.kind == "pure_gauge":
        if spec.gauge_tag == "bilinear":
            out[..., 0, 1] = 1.0
            out[..., 1, 0] = 1.0
        else:
            for j in range(dim):
                out[..., j, j] = 1.0
        return out
    if spec.kind == "constant_field":
        out[..., 0, 1] = -0.5 * spec.b0
        out[..., 1, 0] = 0.5 * spec.b0
        return out
    x = pts
    r2 = np.sum(pts ** 2, axis=-1)
    inside = r2 < rho0 ** 2
    m = np.maximum(r2, rho0 ** 2)
    if spec.kind == "aharonov_bohm_2d":
        # outside: A = (-x2, x1)/r^2; inside the core the denominator freezes
        f = np.where(inside, 0.0, 1.0) / m ** 2
        out[..., 0, 0] = 2.0 * x[..., 0] * x[..., 1] * f
        out[..., 0, 1] = -1.0 / m + 2.0 * x[..., 1] ** 2 * f
        out[..., 1, 0] = 1.0 / m - 2.0 * x[..., 0] ** 2 * f
        out[..., 1, 1] = -2.0 * x[..., 0] * x[..., 1] * f
        return out
    if spec.kind == "block_field_3d":
        dp = np.zeros_like(out)
        dp[..., 0, 0] = x[..., 2]
        dp[..., 0, 2] = x[..., 0]
        dp[..., 1, 1] = x[..., 2]
        dp[..., 1, 2] = x[..., 1]
        dp[..., 2, 0] = -2.0 * x[..., 0]
        dp[..., 2, 1] = -2.0 * x[..., 1]
        p = np.stack(
            [x[..., 0] * x[..., 2], x[..., 1] * x[..., 2], -(x[..., 0] ** 2 + x[..., 1] ** 2)],
            axis=-1,
        )
        grad_m = np.where(inside[..., None], 0.0, 2.0 * x)
        out = dp / m[..., None, None] - p[..., :, None] * grad_m[..., None, :] / (m ** 2)[..., None, None]
        return out
    if spec.kind == "block_matrix_3d":
        r = np.sqrt(np.maximum(r2, 1e-300))
        w = np.where(inside, 0.5 / rho0 ** 2, (0.5 + np.log(np.maximum(r, rho0) / rho0)) / m)
        wp = np.where(inside, 0.0, -2.0 * np.log(np.maximum(r, rho0) / rho0) / np.maximum(r, rho0) ** 3)
        xh = x / np.maximum(r, 1e-300)[..., None]
        out[..., 0, :] = -x[..., 1, None] * wp[..., None] * xh
        out[..., 0, 1] += -w
        out[..., 1, :] = x[..., 0, None] * wp[..., None] * xh
        out[..., 1, 0] += w
        return out
    raise FieldError(f"no closed form for kind {spec.kind!r}")


def tensor_at(spec: PotentialSpec, pts: np.ndarray, rho0: float) -> np.ndarray:
    """Closed-form tensor for grid sampling, out[..., j, k] = B_jk.

    For the defined-field kinds (block_matrix_3d) this is the postulated
    tensor; for potential-backed kinds it equals the curl of the regularized
    potential (piecewise, with the core value inside rho0).
    """
    pts = np.asarray(pts, dtype=float)
    dim = pts.shape[-1]
    out = np.zeros(pts.shape[:-1] + (dim, dim))
    if spec.kind in ("zero", "pure_gauge"):
        return out
    if spec.kind == "constant_field":
        out[..., 0, 1] = spec.b0
        out[..., 1, 0] = -spec.b0
        return out
    r2 = np.sum(pts ** 2, axis=-1)
    inside = r2 < rho0 ** 2
    if spec.kind == "aharonov_bohm_2d":
        b = np.where(inside, 2.0 / rho0 ** 2, 0.0)
        out[..., 0, 1] = b
        out[..., 1, 0] = -b
        return out
    if spec.kind == "block_field_3d":
        m = np.where(inside, rho0 ** 2 / 3.0, np.maximum(r2, 1e-300))
        b13 = -pts[..., 0] / m
        b23 = -pts[..., 1] / m
        out[..., 0, 2] = b13
        out[..., 2, 0] = -b13
        out[..., 1, 2] = b23
        out[..., 2, 1] = -b23
        return out
    if spec.kind == "block_matrix_3d":
        m = np.maximum(r2, rho0 ** 2)
        out[..., 0, 1] = 1.0 / m
        out[..., 1, 0] = -1.0 / m
        return out
    raise FieldError(f"no closed form for kind {spec.kind!r}")


def eval_potential(spec: PotentialSpec, grid: GridSpec) -> SampledRealVectorField:
    """Sample A on the grid."""
    spec.check_grid(grid)
    if spec.kind == "custom":
        return SampledRealVectorField(grid, tuple(np.asarray(c, float) for c in spec.components))
    pts = np.stack(meshes(grid), axis=-1)
    a = potential_at(spec, pts, spec.core_radius(grid))
    return SampledRealVectorField(grid, tuple(a[..., j] for j in range(grid.dim)))


@dataclass(frozen=True)
class MagneticTensor:
    """Antisymmetric tensor samples, entries[j][k] = B_jk on the grid."""

    grid: GridSpec
    entries: tuple

    def antisymmetry_defect(self) -> float:
        worst = 0.0
        for j in range(self.grid.dim):
            for k in range(self.grid.dim):
                worst = max(worst, float(np.abs(self.entries[j][k] + self.entries[k][j]).max()))
        return worst


def magnetic_tensor(spec: PotentialSpec, grid: GridSpec, mode: str = "analytic") -> MagneticTensor:
    """B_jk = dA^k/dx_j - dA^j/dx_k, by closed form or spectral differentiation."""
    spec.check_grid(grid)
    dim = grid.dim
    if mode == "analytic":
        if spec.kind == "custom":
            raise FieldError("analytic tensor not available for custom kind")
        pts = np.stack(meshes(grid), axis=-1)
        b = tensor_at(spec, pts, spec.core_radius(grid))
        entries = tuple(tuple(b[..., j, k] for k in range(dim)) for j in range(dim))
        return MagneticTensor(grid, entries)
    if mode != "spectral":
        raise FieldError(f"unknown tensor mode {mode!r}")
    a = eval_potential(spec, grid)
    grads = [spectral_gradient_values(c.astype(complex), grid) for c in a.components]
    entries = tuple(
        tuple((grads[k][j] - grads[j][k]).real for k in range(dim)) for j in range(dim)
    )
    return MagneticTensor(grid, entries)


def psi_field(b: MagneticTensor) -> SampledRealVectorField:
    """Psi^j = sum_k x_k B_jk from sampled tensor entries."""
    xs = meshes(b.grid)
    comps = []
    for j in range(b.grid.dim):
        acc = np.zeros(b.grid.shape)
        for k in range(b.grid.dim):
            acc += xs[k] * b.entries[j][k]
        comps.append(acc)
    return SampledRealVectorField(b.grid, tuple(comps))


@dataclass(frozen=True)
class HypothesisReport:
    """Grid-measured constants entering the main decay hypotheses."""

    grid: GridSpec
    sup_xtB: float
    M_A: float
    transversality_defect: float
    kernel_defect: float
    M1: float
    M2: float
    N1: float
    core_excluded_radius: float

    def __post_init__(self):
        for name in ("sup_xtB", "M_A", "transversality_defect", "kernel_defect", "M1", "M2", "N1"):
            if getattr(self, name) < 0:
                raise FieldError(f"{name} must be nonnegative")


def _exclusion_mask(spec: PotentialSpec, grid: GridSpec) -> tuple[np.ndarray, float]:
    rc = spec.core_radius(grid)
    if rc == 0.0:
        return np.ones(grid.shape, dtype=bool), 0.0
    return radius_squared(grid) >= (2.0 * rc) ** 2, 2.0 * rc


def hypothesis_report(
    spec: PotentialSpec,
    grid: GridSpec,
    v: np.ndarray,
    v1_values: np.ndarray | None = None,
    v2_of_t=None,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> HypothesisReport:
    """Measure the hypothesis constants by grid suprema.

    v must be a unit vector; V2 is sampled at t in {0, 1/2, 1} for the
    time-dependent weighted supremum.
    """
    spec.check_grid(grid)
    v = np.asarray(v, dtype=float)
    if v.shape != (grid.dim,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise FieldError("v must be a unit vector of the grid dimension")
    mask, excluded = _exclusion_mask(spec, grid)
    rho0 = spec.core_radius(grid)

    if spec.kind == "custom":
        b = magnetic_tensor(spec, grid, mode="spectral")
        psi = psi_field(b)
        psi_mag = np.sqrt(sum(c ** 2 for c in psi.components))
        bt = b
    else:
        pts = np.stack(meshes(grid), axis=-1)
        psi_mag = np.sqrt(np.sum(psi_at(spec, pts, rho0) ** 2, axis=-1))
        bt = magnetic_tensor(spec, grid, mode="analytic")

    sup_xtb = float(psi_mag[mask].max()) if mask.any() else 0.0

    a = eval_potential(spec, grid)
    xs = meshes(grid)
    xa = sum(xs[j] * a.components[j] for j in range(grid.dim))
    transversality = float(np.abs(xa).max())

    vb = []
    for k in range(grid.dim):
        vb.append(sum(v[j] * bt.entries[j][k] for j in range(grid.dim)))
    kernel = float(np.sqrt(sum(c ** 2 for c in vb))[mask].max()) if mask.any() else 0.0

    m1 = float(np.abs(v1_values).max()) if v1_values is not None else 0.0
    m2 = 0.0
    n1 = 1.0
    if v2_of_t is not None:
        r2 = radius_squared(grid)
        sup_im = 0.0
        sup_weighted = 0.0
        for t in (0.0, 0.5, 1.0):
            v2 = np.asarray(v2_of_t(t))
            sup_im = max(sup_im, float(np.abs(v2.imag).max()))
            w = np.exp(r2 / (alpha * t + beta * (1.0 - t)) ** 2)
            sup_weighted = max(sup_weighted, float((w * np.abs(v2)).max()))
        n1 = float(np.exp(sup_im))
        m2 = sup_weighted * n1
    return HypothesisReport(
        grid=grid,
        sup_xtB=sup_xtb,
        M_A=4.0 * sup_xtb ** 2,
        transversality_defect=transversality,
        kernel_defect=kernel,
        M1=m1,
        M2=m2,
        N1=n1,
        core_excluded_radius=excluded,
    )


__all__ = [
    "CORE_KINDS",
    "ZOO_KINDS",
    "FieldError",
    "HypothesisReport",
    "MagneticTensor",
    "PotentialSpec",
    "eval_potential",
    "hypothesis_report",
    "jacobian_at",
    "magnetic_tensor",
    "potential_at",
    "psi_at",
    "psi_field",
    "tensor_at",
]
