"""Discrete differential operators on grid fields.

Central differences on interior nodes with first-order one-sided stencils at
edges (np.gradient semantics, mirrored by torch.gradient). The directional
derivative (v.grad) uses first-order upwinding selected by the sign of the
local velocity component. All operators accept raw (nx, ny[, 2]) arrays or
the field wrappers and run on either backend.
"""

from __future__ import annotations

from ..backends import ops_for
from ..errors import DimensionTooSmall
from .grids import GridSpec, ScalarField, VectorField


def _unwrap(f):
    if isinstance(f, (ScalarField, VectorField)):
        return f.spec, f.values
    raise TypeError("expected ScalarField or VectorField")


def _require(spec: GridSpec, n: int, op: str):
    if spec.nx < n or spec.ny < n:
        raise DimensionTooSmall(f"{op} needs nx, ny >= {n}, got {spec.nx}x{spec.ny}")


def divergence(f: VectorField) -> ScalarField:
    """d vx/dx + d vy/dy, units 1/frame."""
    spec, v = _unwrap(f)
    _require(spec, 3, "divergence")
    ops = ops_for(v)
    d = ops.gradient(v[..., 0], spec.dx, axis=0) + ops.gradient(v[..., 1], spec.dx, axis=1)
    return ScalarField(spec, d)


def curl(f: VectorField) -> ScalarField:
    """d vy/dx - d vx/dy: scalar vorticity of a planar field."""
    spec, v = _unwrap(f)
    _require(spec, 3, "curl")
    ops = ops_for(v)
    c = ops.gradient(v[..., 1], spec.dx, axis=0) - ops.gradient(v[..., 0], spec.dx, axis=1)
    return ScalarField(spec, c)


def _second_diff_axis0(v, dx):
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    ops = ops_for(v)
    return ops.concatenate([d2[:1], d2, d2[-1:]], axis=0)


def laplacian(f: VectorField) -> VectorField:
    """5-point Laplacian per component; edges copy the one-sided second diff."""
    spec, v = _unwrap(f)
    _require(spec, 5, "laplacian")
    out = _second_diff_axis0(v, spec.dx) + _second_diff_axis0(v.swapaxes(0, 1), spec.dx).swapaxes(0, 1)
    return VectorField(spec, out)


def grad_div(f: VectorField) -> VectorField:
    """grad(div v) via central gradient of the divergence field."""
    spec, v = _unwrap(f)
    _require(spec, 5, "grad_div")
    ops = ops_for(v)
    d = divergence(f).values
    out = ops.stack([ops.gradient(d, spec.dx, axis=0), ops.gradient(d, spec.dx, axis=1)], axis=-1)
    return VectorField(spec, out)


def _upwind_diff_axis0(g, v_axis, dx):
    """First-order upwind d g/dx0 selected by sign(v_axis); edge falls back to
    the only available one-sided difference."""
    ops = ops_for(g)
    d = (g[1:] - g[:-1]) / dx
    backward = ops.concatenate([d[:1], d], axis=0)
    forward = ops.concatenate([d, d[-1:]], axis=0)
    return ops.where(v_axis > 0, backward, forward)


def directional_derivative(v, g, spec: GridSpec):
    """(v . grad) g applied componentwise; v, g are (nx, ny, 2) arrays."""
    dgx = _upwind_diff_axis0(g, v[..., 0:1], spec.dx)
    dgy = _upwind_diff_axis0(g.swapaxes(0, 1), v.swapaxes(0, 1)[..., 1:2], spec.dx).swapaxes(0, 1)
    return v[..., 0:1] * dgx + v[..., 1:2] * dgy


def advective_squared(f: VectorField) -> VectorField:
    """(v . grad)^2 v: the upwinded directional derivative applied twice."""
    spec, v = _unwrap(f)
    _require(spec, 5, "advective_squared")
    once = directional_derivative(v, v, spec)
    return VectorField(spec, directional_derivative(v, once, spec))
