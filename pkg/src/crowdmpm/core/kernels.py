"""Quadratic B-spline interpolation kernels and particle stencils.

The 3x3 stencil of a particle covers nodes base..base+2 per axis with
base = floor(u - 0.5) for the grid-relative coordinate u = (x - origin)/dx.
Weight gradients default to the affine form (4/dx^2) * w * (x_i - x_p); the
exact tensor-product derivative is available for validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backends import numpy_ops, ops_for
from ..errors import OutOfDomain
from .grids import GridSpec


def bspline_quadratic(t):
    """Quadratic B-spline: 3/4 - t^2 for |t|<=1/2, (3/2-|t|)^2/2 out to 3/2."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.where(
        t <= 0.5,
        0.75 - t**2,
        np.where(t < 1.5, 0.5 * (1.5 - t) ** 2, 0.0),
    )
    return out if out.ndim else float(out)


def bspline_quadratic_deriv(t):
    """d/dt of bspline_quadratic: -2t inside, -(3/2-|t|)*sign(t) out to 3/2."""
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(t)
    out = np.where(
        a <= 0.5,
        -2.0 * t,
        np.where(a < 1.5, -(1.5 - a) * np.sign(t), 0.0),
    )
    return out if out.ndim else float(out)


@dataclass
class Stencils:
    """Vectorized 3x3 stencils for N particles.

    base: (N, 2) int node index of the lower-left stencil corner;
    flat_idx: (N, 3, 3) int flattened node index (ix*ny + iy);
    weights: (N, 3, 3); dpos: (N, 3, 3, 2) = x_node - x_p.
    """

    base: np.ndarray
    flat_idx: np.ndarray
    weights: object
    dpos: object
    spec: GridSpec

    def weight_gradients(self, exact: bool = False):
        """(N, 3, 3, 2) kernel gradients.

        Default is the affine approximation (4/dx^2) w (x_i - x_p); with
        exact=True, the true tensor-product derivative (numpy path only).
        """
        if not exact:
            dx = self.spec.dx
            return (4.0 / dx**2) * self.weights[..., None] * self.dpos
        ops = ops_for(self.weights)
        d = ops.to_numpy(self.dpos) / self.spec.dx
        wx = bspline_quadratic(d[..., 0])
        wy = bspline_quadratic(d[..., 1])
        gx = bspline_quadratic_deriv(d[..., 0]) / self.spec.dx
        gy = bspline_quadratic_deriv(d[..., 1]) / self.spec.dx
        return np.stack([gx * wy, wx * gy], axis=-1)


def _axis_weights(fx):
    """1D quadratic B-spline weights for the three nodes around fx in [0.5, 1.5)."""
    ops = ops_for(fx)
    w0 = 0.5 * (1.5 - fx) ** 2
    w1 = 0.75 - (fx - 1.0) ** 2
    w2 = 0.5 * (fx - 0.5) ** 2
    return ops.stack([w0, w1, w2], axis=-1)


_OFFSETS = np.array([[(i, j) for j in range(3)] for i in range(3)], dtype=np.int64)


def stencils_for(positions, spec: GridSpec, check: bool = True) -> Stencils:
    """Build 3x3 stencils for an (N, 2) position array (numpy or torch).

    Raises OutOfDomain (with the offending particle index) when a position has
    no full stencil and check=True.
    """
    ops = ops_for(positions)
    origin = ops.asarray(np.array(spec.origin))
    u = (positions - origin) / spec.dx  # grid coords
    u_np = ops.to_numpy(ops.detach(u))
    base = np.floor(u_np - 0.5).astype(np.int64)  # (N, 2)
    if check:
        bad = (base[:, 0] < 0) | (base[:, 0] > spec.nx - 3) | (base[:, 1] < 0) | (base[:, 1] > spec.ny - 3)
        if bad.any():
            i = int(np.argmax(bad))
            raise OutOfDomain(f"particle {i} at {u_np[i] * spec.dx + spec.origin} outside padded interior")
    fx = u - ops.asarray(base)  # (N, 2), in [0.5, 1.5); keeps gradient w.r.t. positions
    wx = _axis_weights(fx[:, 0])  # (N, 3)
    wy = _axis_weights(fx[:, 1])
    weights = wx[:, :, None] * wy[:, None, :]  # (N, 3, 3)
    node_ij = base[:, None, None, :] + _OFFSETS[None]  # (N, 3, 3, 2)
    flat_idx = node_ij[..., 0] * spec.ny + node_ij[..., 1]
    node_pos = ops.asarray(node_ij) * spec.dx + origin
    dpos = node_pos - positions[:, None, None, :]
    return Stencils(base=base, flat_idx=flat_idx, weights=weights, dpos=dpos, spec=spec)


def stencil_for(position, spec: GridSpec):
    """Single-position convenience wrapper around stencils_for."""
    pos = np.asarray(position, dtype=np.float64).reshape(1, 2)
    st = stencils_for(pos, spec)
    return Stencils(
        base=st.base[0],
        flat_idx=st.flat_idx[0],
        weights=st.weights[0],
        dpos=st.dpos[0],
        spec=spec,
    )


def sample_field(values_flat, st: Stencils):
    """Sample a flattened (n_nodes, k) or (n_nodes,) field at stencil particles."""
    ops = ops_for(values_flat)
    gathered = ops.gather(values_flat, st.flat_idx.reshape(-1))
    if gathered.ndim == 1:
        g = gathered.reshape(st.weights.shape)
        return (st.weights * g).sum(1).sum(1)
    k = gathered.shape[-1]
    g = gathered.reshape(st.weights.shape + (k,))
    return (st.weights[..., None] * g).sum(1).sum(1)
