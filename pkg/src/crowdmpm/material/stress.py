"""Crowd-material stress: weakly compressible bulk + pairwise repulsion.

Per particle, the bulk contribution is the matrix

    G_p = -(4 / dx^2) eps V0 (J - 1) I,

which resists volume change symmetrically. On top of that, particles whose
comfort zones overlap repel along the separation axis with magnitude
``-k log(d)``, where d is the gap between incompressible cores measured in
units of the comfort distance:

    d = (|x_p - x_p'| - (r_a + r_a')) / ((r_b - r_a) + (r_b' - r_a')),

active for 0 < d < 1 and floored at D_FLOOR so the log (and its gradient)
stays finite in deep overlap. Node forces are

    f_i = sum_p w_ip { G_p (x_i - x_p) + sum_{p' in N_p} -k log(d) e_p'p }.

The repulsion can also be assembled the long way round, as a repulsive term
plus an explicit normal-traction term that is projected out again node by
node; both routes are algebraically identical and the second exists purely
as a cross-check (``explicit_traction=True``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backends import ops_for
from ..core.kernels import Stencils
from ..mpm.particles import ParticleState, jacobians

D_FLOOR = 1e-3


@dataclass
class MaterialParams:
    """epsilon: bulk stiffness (Young's-modulus-like); k: repulsion strength.

    Either may be a python float, a backend scalar, or a per-particle array of
    shape (N,); learned parameters arrive here as backend tensors so gradients
    flow through the force assembly.
    """

    epsilon: object = 1.0
    k: object = 1.0


def bulk_matrix(state: ParticleState, dx: float, epsilon):
    """G_p, the (N, 2, 2) matrix multiplying (x_i - x_p) in the node force."""
    ops = ops_for(state.x)
    J = jacobians(state)
    coeff = -(4.0 / dx**2) * state.V0 * (J - 1.0) * epsilon
    eye = ops.asarray(np.eye(2))
    return coeff[:, None, None] * eye[None, :, :]


def pair_geometry(state: ParticleState, pairs: np.ndarray):
    """Per-pair clamped gap ratio d, unit axis e (j -> i), and raw d.

    Returns (d, e, d_raw) for pairs (i, j): e points from particle j toward
    particle i, so +e is the direction in which i is pushed.
    """
    ops = ops_for(state.x)
    i, j = pairs[:, 0], pairs[:, 1]
    diff = state.x[i] - state.x[j]
    dist = ops.sqrt((diff**2).sum(1) + 1e-30)
    e = diff / dist[:, None]
    core = state.r_a[i] + state.r_a[j]
    comfort = (state.r_b[i] - state.r_a[i]) + (state.r_b[j] - state.r_a[j])
    d_raw = (dist - core) / comfort
    d = ops.clip(d_raw, D_FLOOR, 1.0)
    return d, e, d_raw


def pair_repulsion(state: ParticleState, pairs: np.ndarray, k):
    """(P, 2) repulsive force on pairs[:, 0]; the mate gets the negative.

    Magnitude -k log(d) for d < 1 and zero at d >= 1 (the clip makes the
    log vanish there without a branch).
    """
    d, e, _ = pair_geometry(state, pairs)
    ops = ops_for(state.x)
    k_pair = k if np.ndim(k) == 0 else 0.5 * (k[pairs[:, 0]] + k[pairs[:, 1]])
    return (-(k_pair * ops.log(d)))[:, None] * e


def particle_pair_sums(state: ParticleState, pairs: np.ndarray, k):
    """(N, 2) net repulsion per particle: scatter of the antisymmetric pairs."""
    ops = ops_for(state.x)
    out = ops.zeros((state.n, 2))
    if len(pairs) == 0:
        return out
    f = pair_repulsion(state, pairs, k)
    ops.scatter_add(out, ops.index(pairs[:, 0]), f)
    ops.scatter_add(out, ops.index(pairs[:, 1]), -f)
    return out


def overlap_count(state: ParticleState, pairs: np.ndarray) -> int:
    """Pairs pressed beyond the log floor -- a crowding severity diagnostic."""
    if len(pairs) == 0:
        return 0
    _, _, d_raw = pair_geometry(state, pairs)
    ops = ops_for(state.x)
    return int((ops.to_numpy(ops.detach(d_raw)) < D_FLOOR).sum())


def stress_force(
    state: ParticleState,
    st: Stencils,
    pairs: np.ndarray,
    params: MaterialParams,
    explicit_traction: bool = False,
):
    """(n_nodes, 2) node forces from bulk stress and pair repulsion."""
    ops = ops_for(state.x)
    spec = st.spec
    G = bulk_matrix(state, spec.dx, params.epsilon)
    Gd = ops.einsum("nab,nijb->nija", G, st.dpos)  # (N, 3, 3, 2)

    if explicit_traction:
        per_node = Gd + _pair_term_with_traction(state, st, pairs, params.k, Gd)
    else:
        S = particle_pair_sums(state, pairs, params.k)
        per_node = Gd + S[:, None, None, :]

    vals = st.weights[..., None] * per_node
    out = ops.zeros((spec.n_nodes, 2))
    ops.scatter_add(out, st.flat_idx.reshape(-1), vals.reshape(-1, 2))
    return out


def _pair_term_with_traction(state, st, pairs, k, Gd):
    """The un-reduced route: add traction to each pair force, then project
    the same traction back out of the node force. Kept for validation; the
    difference telescopes to the plain repulsion sum."""
    ops = ops_for(state.x)
    n = state.n
    flat = ops.zeros((n * 9, 2))
    if len(pairs) == 0:
        return flat.reshape(n, 3, 3, 2)
    d, e, _ = pair_geometry(state, pairs)
    k_pair = k if np.ndim(k) == 0 else 0.5 * (k[pairs[:, 0]] + k[pairs[:, 1]])
    rep = (-(k_pair * ops.log(d)))[:, None] * e  # (P, 2)

    cell = np.arange(9).reshape(1, 3, 3)
    # per pair endpoint: f_r = rep + f_t, contribution f_r - f_t where
    # f_t = <G_p dpos, e> e depends on the node through dpos
    for col, sign in ((0, 1.0), (1, -1.0)):
        idx = pairs[:, col]
        axis = sign * e  # axis from mate toward this endpoint
        Gd_pair = ops.gather(Gd, ops.index(idx))  # (P, 3, 3, 2)
        proj = ops.einsum("pija,pa->pij", Gd_pair, axis)
        f_t = proj[..., None] * axis[:, None, None, :]
        f_r = (sign * rep)[:, None, None, :] + f_t
        node_slot = ops.index((idx[:, None, None] * 9 + cell).reshape(-1))
        ops.scatter_add(flat, node_slot, (f_r - f_t).reshape(-1, 2))
    return flat.reshape(n, 3, 3, 2)
