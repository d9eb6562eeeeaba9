from .particles import (
    DENSITY,
    ParticleState,
    jacobians,
    make_particles,
    read_snapshot,
    write_snapshot,
)
from .stepper import (
    CFL_FRACTION,
    J_MAX,
    J_MIN,
    StepConfig,
    StepDiagnostics,
    apply_boundary,
    check_stability,
    g2p,
    grid_update,
    p2g,
    step,
)
from .engine import crowd_step, materialize

__all__ = [
    "DENSITY",
    "ParticleState",
    "jacobians",
    "make_particles",
    "read_snapshot",
    "write_snapshot",
    "CFL_FRACTION",
    "J_MAX",
    "J_MIN",
    "StepConfig",
    "StepDiagnostics",
    "apply_boundary",
    "check_stability",
    "crowd_step",
    "g2p",
    "grid_update",
    "materialize",
    "p2g",
    "step",
]
