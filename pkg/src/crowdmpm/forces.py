"""Active (Toner-Tu style) and body forces, assembled as node force fields.

The active acceleration per particle is

    b_p = alpha v_p - beta |v_p|^2 v_p
          + D_L [grad(div v)]_p + D1 [lap v]_p + D2 [(v.grad)^2 v]_p + xi_p,

with the bracketed terms sampled from node fields through the B-spline
stencil and xi_p iid Gaussian(0, noise_sigma^2) per component. Nodes receive
sum_p w_ip m_p b_p. alpha may be a constant, a per-node table, or a callable
of the velocity field producing either.

Body forces: goal attraction (m_p/dt)(v_d e_pg - v_p) and centripetal
m_p |v_p|^2 / r toward a fixed center, both scattered with w_ip. A particle
sitting exactly on the goal (or center) gets a zero direction vector, which
for the goal case leaves pure braking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .backends import ops_for
from .core.grids import ScalarField, VectorField
from .core.kernels import Stencils, sample_field, stencils_for
from .core.operators import advective_squared, grad_div, laplacian
from .errors import NonFiniteField

if TYPE_CHECKING:  # imported lazily; the mpm package imports this module
    from .mpm.particles import ParticleState

_ZERO_DIR_EPS = 1e-6


@dataclass
class ActiveParams:
    alpha_model: object = 0.0  # scalar | per-node table | callable(v) -> either
    beta: object = 0.0
    d_l: object = 0.0
    d1: object = 0.0
    d2: object = 0.0
    noise_sigma: object = 0.0
    seed: int = 0


@dataclass
class BodyForceConfig:
    kind: str = "none"  # none | goal | centripetal
    goal: Optional[tuple] = None  # x_g, pixels
    v_d: float = 0.0  # preferred speed, pixels/frame
    center: Optional[tuple] = None
    radius: float = 0.0  # pixels

    def __post_init__(self):
        if self.kind not in ("none", "goal", "centripetal"):
            raise ValueError(f"unknown body force kind {self.kind!r}")
        if self.kind == "goal":
            if self.goal is None or self.v_d < 0:
                raise ValueError("goal force needs a goal point and v_d >= 0")
        if self.kind == "centripetal":
            if self.center is None or self.radius <= 0:
                raise ValueError("centripetal force needs a center and radius > 0")


class NoiseStream:
    """Counter-based Gaussian draws: one independent stream per step index.

    Each (seed, step) pair owns its own generator, so evaluations are
    reproducible regardless of call order and the same step can be replayed
    (primal and gradient tape see identical noise)."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def normal(self, step: int, n: int) -> np.ndarray:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(step),))
        return np.random.default_rng(ss).standard_normal((n, 2))


def tt_feature_fields(v: VectorField):
    """(|v|^2 v, grad(div v), lap v, (v.grad)^2 v) as node fields."""
    speed2 = (v.values**2).sum(-1)
    cubic = VectorField(v.spec, speed2[..., None] * v.values)
    return cubic, grad_div(v), laplacian(v), advective_squared(v)


def _alpha_per_particle(alpha_model, v: VectorField, st: Stencils):
    a = alpha_model(v) if callable(alpha_model) else alpha_model
    if isinstance(a, ScalarField):
        a = a.values
    if np.ndim(a) == 0:
        return a
    return sample_field(a.reshape(-1), st)


def scatter_to_nodes(values_p, st: Stencils):
    """sum_p w_ip values_p -> flat (n_nodes, 2) field."""
    ops = ops_for(values_p)
    out = ops.zeros((st.spec.n_nodes, 2))
    vals = st.weights[..., None] * values_p[:, None, None, :]
    ops.scatter_add(out, st.flat_idx.reshape(-1), vals.reshape(-1, 2))
    return out


def active_force(
    v: VectorField,
    state: ParticleState,
    params: ActiveParams,
    step: int = 0,
    st: Stencils | None = None,
):
    """Per-node active force, flat (n_nodes, 2)."""
    ops = ops_for(state.x)
    if st is None:
        st = stencils_for(state.x, v.spec)

    vp = state.v
    alpha = _alpha_per_particle(params.alpha_model, v, st)
    speed2 = (vp**2).sum(1)
    b = alpha[:, None] * vp if np.ndim(alpha) else alpha * vp
    b = b - params.beta * speed2[:, None] * vp

    _, gd, lap, adv = tt_feature_fields(v)
    for coeff, f in ((params.d_l, gd), (params.d1, lap), (params.d2, adv)):
        b = b + coeff * sample_field(f.values.reshape(-1, 2), st)

    eta = ops.asarray(NoiseStream(params.seed).normal(step, state.n))
    b = b + params.noise_sigma * eta

    if not ops.isfinite_all(b):
        raise NonFiniteField("active force produced non-finite accelerations")
    return scatter_to_nodes(state.m[:, None] * b, st)


def goal_attraction(state: ParticleState, cfg: BodyForceConfig, dt: float, st: Stencils):
    ops = ops_for(state.x)
    goal = ops.asarray(np.asarray(cfg.goal, dtype=np.float64))
    diff = goal[None, :] - state.x
    dist = ops.sqrt((diff**2).sum(1) + 1e-30)
    at_goal = dist < _ZERO_DIR_EPS
    e_pg = ops.where(at_goal[:, None], ops.zeros_like(diff), diff / dist[:, None])
    f_p = (state.m / dt)[:, None] * (cfg.v_d * e_pg - state.v)
    return scatter_to_nodes(f_p, st)


def centripetal(state: ParticleState, cfg: BodyForceConfig, st: Stencils):
    ops = ops_for(state.x)
    center = ops.asarray(np.asarray(cfg.center, dtype=np.float64))
    diff = center[None, :] - state.x
    dist = ops.sqrt((diff**2).sum(1) + 1e-30)
    at_center = dist < _ZERO_DIR_EPS
    toward = ops.where(at_center[:, None], ops.zeros_like(diff), diff / dist[:, None])
    mag = state.m * (state.v**2).sum(1) / cfg.radius
    return scatter_to_nodes(mag[:, None] * toward, st)


def body_force(state: ParticleState, cfg: BodyForceConfig, dt: float, st: Stencils):
    """Dispatch on cfg.kind; returns None when no body force is configured."""
    if cfg is None or cfg.kind == "none":
        return None
    if cfg.kind == "goal":
        return goal_attraction(state, cfg, dt, st)
    return centripetal(state, cfg, st)
