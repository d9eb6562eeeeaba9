"""Full crowd step: transfers plus the composed force assembly.

Wires the material stress, the active force, and any body force into the
transfer cycle, refreshing neighbor pairs from current (detached) positions
each step. `params` may be a fitted parameter model (evaluated against the
live state, so per-particle representations see current neighborhoods) or
already-materialized values; `body` is a BodyForceConfig, `boundary` an
object with flat .project / .normals node arrays.
"""

from __future__ import annotations

from ..core.grids import GridSpec, VectorField
from ..forces import ActiveParams, active_force, body_force
from ..material import MaterialParams, neighbor_pairs, stress_force
from .particles import ParticleState
from .stepper import StepConfig, StepDiagnostics, step


def materialize(params, state: ParticleState, pairs):
    """ParamModel -> ParamValues; anything else passes through."""
    if params is not None and hasattr(params, "representation"):
        return params.values(state, pairs)
    return params


def crowd_step(
    state: ParticleState,
    spec: GridSpec,
    cfg: StepConfig,
    params=None,
    body=None,
    boundary=None,
    step_index: int = 0,
) -> tuple[ParticleState, StepDiagnostics]:
    pairs = neighbor_pairs(state.x, state.r_b)
    vals = materialize(params, state, pairs)

    def forces(st_state, grid, st):
        total = None
        if vals is not None:
            mat = MaterialParams(epsilon=vals.epsilon, k=vals.k)
            total = stress_force(st_state, st, pairs, mat)
            v_field = VectorField(spec, grid.velocity.reshape(spec.nx, spec.ny, 2))
            act = ActiveParams(
                alpha_model=vals.alpha,
                beta=vals.beta,
                d_l=vals.d_l,
                d1=vals.d1,
                d2=vals.d2,
                noise_sigma=vals.noise_sigma,
                seed=cfg.seed,
            )
            total = total + active_force(v_field, st_state, act, step=step_index, st=st)
        bf = body_force(st_state, body, cfg.dt, st) if body is not None else None
        if bf is not None:
            total = bf if total is None else total + bf
        return total

    return step(state, spec, cfg, forces=forces, boundary=boundary)
