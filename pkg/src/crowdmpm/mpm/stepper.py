"""Affine particle-in-cell transfer cycle on a fixed Cartesian grid.

One step is: particles-to-grid (mass, APIC momentum), node force application,
boundary response, grid-to-particles (velocity, affine matrix, deformation
gradient, advection). Forces come in through a callback so material, active
and body contributions can be composed by the caller without the stepper
knowing about any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..backends import ops_for
from ..core.grids import MASS_EPSILON, Grid, GridSpec
from ..core.kernels import Stencils, stencils_for
from ..errors import NonFiniteForce, StabilityViolation
from .particles import ParticleState

# det(F) kept inside [J_MIN, J_MAX]; below J_EPS the gradient is rebuilt
# isotropically because the rescale direction is no longer meaningful.
J_MIN = 0.05
J_MAX = 20.0
J_EPS = 1e-9

# Frobenius bound on F before its shear content is discarded. The stress
# model only reads det(F), but a determinant clamp alone lets the entries of
# a sheared F grow without limit until a*d - b*c cancels to an exact zero.
F_NORM_CAP = 100.0

CFL_FRACTION = 0.4


@dataclass(frozen=True)
class StepConfig:
    dt: float
    gamma: float = 0.9  # boundary restitution: v <- v - gamma n <n, v>
    deterministic: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma outside [0, 2]: {self.gamma}")


@dataclass
class StepDiagnostics:
    total_mass: float
    total_momentum: np.ndarray  # (2,)
    max_speed: float
    n_particles: int


def p2g(state: ParticleState, st: Stencils) -> Grid:
    """Scatter mass and affine momentum to the grid, then form velocities."""
    ops = ops_for(state.x)
    spec = st.spec
    n_nodes = spec.nx * spec.ny

    idx = st.flat_idx.reshape(-1)
    w = st.weights  # (N, 3, 3)

    mass = ops.zeros(n_nodes)
    ops.scatter_add(mass, idx, (w * state.m[:, None, None]).reshape(-1))

    # momentum contribution per node: w m (v + C (x_i - x_p))
    Cd = ops.einsum("nab,nijb->nija", state.C, st.dpos)
    mom_val = w[..., None] * state.m[:, None, None, None] * (state.v[:, None, None, :] + Cd)
    momentum = ops.zeros((n_nodes, 2))
    ops.scatter_add(momentum, idx, mom_val.reshape(-1, 2))

    occupied = mass > MASS_EPSILON
    safe_mass = ops.where(occupied, mass, ops.full((), 1.0))
    velocity = ops.where(occupied[:, None], momentum / safe_mass[:, None], ops.zeros((n_nodes, 2)))
    return Grid(spec=spec, mass=mass, momentum=momentum, velocity=velocity)


def grid_update(grid: Grid, forces, dt: float) -> None:
    """Apply node forces: v_i <- v_i + dt f_i / m_i on occupied nodes."""
    ops = ops_for(grid.velocity)
    if not ops.isfinite_all(forces):
        raise NonFiniteForce("non-finite node force")
    occupied = grid.mass > MASS_EPSILON
    safe_mass = ops.where(occupied, grid.mass, ops.full((), 1.0))
    grid.velocity = grid.velocity + ops.where(
        occupied[:, None], dt * forces / safe_mass[:, None], ops.zeros_like(forces)
    )


def apply_boundary(grid: Grid, project_mask, normals, gamma: float) -> None:
    """Remove a gamma-fraction of the normal velocity at flagged nodes.

    project_mask is a flat (n_nodes,) boolean, normals (n_nodes, 2) unit
    vectors (arbitrary where unflagged). Applied unconditionally, so the
    response also damps separation; with gamma < 1 some normal motion
    survives, gamma = 1 makes the wall perfectly absorbing in the normal.
    """
    ops = ops_for(grid.velocity)
    mask = ops.asarray(np.asarray(project_mask, dtype=np.float64))
    n = ops.asarray(np.asarray(normals, dtype=np.float64))
    vn = (grid.velocity * n).sum(1)
    grid.velocity = grid.velocity - gamma * mask[:, None] * n * vn[:, None]


def g2p(state: ParticleState, grid: Grid, st: Stencils, dt: float) -> ParticleState:
    """Gather velocities, rebuild the affine matrix, advect, update F."""
    ops = ops_for(grid.velocity)
    spec = st.spec
    g = ops.gather(grid.velocity, st.flat_idx)  # (N, 3, 3, 2)
    w = st.weights

    v_new = (w[..., None] * g).sum(1).sum(1)
    C_new = (4.0 / spec.dx**2) * ops.einsum("nij,nija,nijb->nab", w, g, st.dpos)
    x_new = state.x + dt * v_new

    eye = ops.asarray(np.eye(2))
    F_new = ops.einsum("nab,nbc->nac", eye[None, :, :] + dt * C_new, state.F)
    F_new = _clamp_determinant(ops, F_new)

    return ParticleState(
        m=state.m, x=x_new, v=v_new, C=C_new, F=F_new,
        r_a=state.r_a, r_b=state.r_b, V0=state.V0,
    )


def _clamp_determinant(ops, F):
    """Rescale F isotropically so det(F) stays in [J_MIN, J_MAX].

    Two pathologies are rebuilt as sqrt(J) * I instead of rescaled: a
    vanished or negative determinant, where the rescale direction means
    nothing, and entries past F_NORM_CAP. The second shows up under
    sustained shear against a wall: the determinant stays clamped while
    the singular values run apart, until a*d - b*c cancels to an exact
    float64 zero. Only det(F) feeds the stress, so the shear content of
    an overgrown F carries no physics worth keeping.
    """
    J = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    degenerate = J <= J_EPS
    J_safe = ops.where(degenerate, ops.full(J.shape, 1.0), J)
    J_target = ops.clip(J_safe, J_MIN, J_MAX)
    scale = ops.sqrt(J_target / J_safe)
    F_scaled = F * scale[:, None, None]
    J_final = ops.where(degenerate, ops.full(J.shape, J_MIN), J_target)
    eye = ops.asarray(np.eye(2))
    F_iso = ops.sqrt(J_final)[:, None, None] * eye[None, :, :]
    overgrown = (F_scaled**2).sum(2).sum(1) > F_NORM_CAP**2
    rebuild = degenerate | overgrown
    return ops.where(rebuild[:, None, None], F_iso, F_scaled)


def check_stability(state: ParticleState, spec: GridSpec, dt: float) -> float:
    """Fail fast when a particle would cross more than a cell fraction."""
    ops = ops_for(state.v)
    speed = ops.to_numpy(ops.detach((state.v**2).sum(1)))
    max_speed = float(np.sqrt(speed.max())) if speed.size else 0.0
    limit = CFL_FRACTION * spec.dx / (max_speed + 1e-6)
    if dt > limit:
        raise StabilityViolation(
            f"dt={dt:g} exceeds {CFL_FRACTION} dx / max|v| = {limit:g} "
            f"(max speed {max_speed:g}, dx {spec.dx:g})"
        )
    return max_speed


def step(
    state: ParticleState,
    spec: GridSpec,
    cfg: StepConfig,
    forces=None,
    boundary=None,
) -> tuple[ParticleState, StepDiagnostics]:
    """Advance one frame.

    forces: optional callback (state, grid, stencils) -> (n_nodes, 2) node
    forces, evaluated after the transfer so it sees current grid velocities.
    boundary: optional object with .project (n_nodes,) bool and
    .normals (n_nodes, 2) arrays.
    """
    max_speed = check_stability(state, spec, cfg.dt)
    st = stencils_for(state.x, spec)
    grid = p2g(state, st)

    if forces is not None:
        f = forces(state, grid, st)
        if f is not None:
            grid_update(grid, f, cfg.dt)

    if boundary is not None:
        apply_boundary(grid, boundary.project, boundary.normals, cfg.gamma)

    new_state = g2p(state, grid, st, cfg.dt)

    ops = ops_for(state.x)
    mass_np = ops.to_numpy(ops.detach(grid.mass))
    mom_np = ops.to_numpy(ops.detach(grid.momentum))
    diag = StepDiagnostics(
        total_mass=float(mass_np.sum()),
        total_momentum=mom_np.sum(axis=0),
        max_speed=max_speed,
        n_particles=state.n,
    )
    return new_state, diag
