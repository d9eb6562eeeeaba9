"""Scenario schema and instantiation.

A scenario is a JSON document describing the domain box, solid walls, exit
openings, particle spawn regions, forces, material/active parameters (inline
values or a fitted model file), and stepping controls. Schema problems and
semantic problems (spawns outside the domain, exits away from any boundary)
both surface as InvalidScenario via load_scenario.
"""

from __future__ import annotations

import json
import os
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from typing_extensions import Annotated

from ..core.grids import GridSpec
from ..errors import InvalidScenario
from ..forces import BodyForceConfig
from ..learn.params import ParamModel, ParamValues
from ..mpm.particles import ParticleState, make_particles
from .geometry import SdfBoundary, build_sdf_boundary, circle_sdf, rect_sdf

SCENARIO_SCHEMA_VERSION = 1

# how close an exit endpoint must sit to the domain edge or a wall face,
# in units of dx
_EXIT_SNAP = 0.5


class RectWall(BaseModel):
    type: Literal["rect"]
    x: float
    y: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)


class CircleWall(BaseModel):
    type: Literal["circle"]
    cx: float
    cy: float
    r: float = Field(gt=0)


Wall = Annotated[Union[RectWall, CircleWall], Field(discriminator="type")]


class ExitSegment(BaseModel):
    x0: float
    y0: float
    x1: float
    y1: float


class RectRegion(BaseModel):
    x: float
    y: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)


class Spawn(BaseModel):
    region: RectRegion
    count: int = Field(gt=0)
    r_a: float = Field(gt=0)
    r_b: float = Field(gt=0)
    v0: tuple[float, float] = (0.0, 0.0)

    @model_validator(mode="after")
    def _radii(self):
        if self.r_b <= self.r_a:
            raise ValueError(f"r_b ({self.r_b}) must exceed r_a ({self.r_a})")
        return self


class BodyForceModel(BaseModel):
    kind: Literal["none", "goal", "centripetal"] = "none"
    goal: Optional[tuple[float, float]] = None
    v_d: float = Field(default=0.0, ge=0)
    center: Optional[tuple[float, float]] = None
    radius: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _required_fields(self):
        if self.kind == "goal" and self.goal is None:
            raise ValueError("goal force needs a goal point")
        if self.kind == "centripetal" and (self.center is None or self.radius <= 0):
            raise ValueError("centripetal force needs a center and radius > 0")
        return self


class MaterialModel(BaseModel):
    epsilon: float = Field(default=1.0, gt=0)
    k: float = Field(default=1.0, ge=0)
    model_path: Optional[str] = None


class ActiveModel(BaseModel):
    alpha: float = 0.0
    beta: float = Field(default=0.0, ge=0)
    d_l: float = 0.0
    d1: float = 0.0
    d2: float = 0.0
    noise_sigma: float = Field(default=0.0, ge=0)


class Scenario(BaseModel):
    schema_version: int = SCENARIO_SCHEMA_VERSION
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    dx: float = Field(gt=0)
    walls: list[Wall] = []
    exits: list[ExitSegment] = []
    spawns: list[Spawn] = []
    body_force: BodyForceModel = BodyForceModel()
    material: MaterialModel = MaterialModel()
    active: ActiveModel = ActiveModel()
    dt: float = Field(gt=0)
    steps: int = Field(gt=0)
    gamma: float = Field(default=0.9, ge=0, le=1)
    seed: int = 0
    snapshot_every: int = Field(default=1, gt=0)

    @model_validator(mode="after")
    def _geometry(self):
        for i, spawn in enumerate(self.spawns):
            r = spawn.region
            if r.x < 0 or r.y < 0 or r.x + r.w > self.width or r.y + r.h > self.height:
                raise ValueError(f"spawn {i} region extends outside the domain")
        for i, ex in enumerate(self.exits):
            for px, py in ((ex.x0, ex.y0), (ex.x1, ex.y1)):
                if not self._on_solid_face(px, py):
                    raise ValueError(
                        f"exit {i} endpoint ({px}, {py}) is not on the domain "
                        "boundary or a wall face"
                    )
        return self

    def _on_solid_face(self, px: float, py: float) -> bool:
        tol = _EXIT_SNAP * self.dx
        p = np.array([[px, py]])
        if abs(float(rect_sdf(p, 0.0, 0.0, self.width, self.height)[0])) <= tol:
            return True
        for wall in self.walls:
            if wall.type == "rect":
                d = rect_sdf(p, wall.x, wall.y, wall.w, wall.h)
            else:
                d = circle_sdf(p, wall.cx, wall.cy, wall.r)
            if abs(float(d[0])) <= tol:
                return True
        return False


def load_scenario(source) -> Scenario:
    """Scenario from a dict, JSON string, or file path; InvalidScenario on any problem."""
    try:
        if isinstance(source, Scenario):
            return source
        if isinstance(source, dict):
            return Scenario.model_validate(source)
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source) as fh:
                return Scenario.model_validate(json.load(fh))
        return Scenario.model_validate(json.loads(source))
    except ValidationError as e:
        raise InvalidScenario(str(e)) from e
    except (json.JSONDecodeError, TypeError) as e:
        raise InvalidScenario(f"unreadable scenario: {e}") from e


def grid_spec_for(sc: Scenario) -> GridSpec:
    return GridSpec.for_domain(sc.width, sc.height, sc.dx)


def build_boundary(sc: Scenario, spec: Optional[GridSpec] = None) -> SdfBoundary:
    spec = spec or grid_spec_for(sc)
    return build_sdf_boundary(
        spec,
        sc.width,
        sc.height,
        walls=[w.model_dump() for w in sc.walls],
        exits=[e.model_dump() for e in sc.exits],
    )


def build_state(sc: Scenario, boundary: Optional[SdfBoundary] = None) -> ParticleState:
    """Seeded dart-throw placement in every spawn region; InvalidScenario("no
    particles") when nothing spawns, or when a region cannot hold its count."""
    placed: list[np.ndarray] = []
    velocities: list[np.ndarray] = []
    radii: list[tuple[float, float]] = []
    occupied = np.zeros((0, 2))

    for idx, spawn in enumerate(sc.spawns):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=sc.seed, spawn_key=(7, idx))
        )
        r = spawn.region
        accepted = []
        budget = spawn.count * 400
        while len(accepted) < spawn.count and budget > 0:
            budget -= 1
            p = rng.uniform((r.x, r.y), (r.x + r.w, r.y + r.h))
            others = np.concatenate([occupied, np.array(accepted).reshape(-1, 2)])
            if len(others) and np.linalg.norm(others - p, axis=1).min() < 2 * spawn.r_a:
                continue
            if boundary is not None and boundary.phi_at(p[None]) < spawn.r_a:
                continue
            accepted.append(p)
        if len(accepted) < spawn.count:
            raise InvalidScenario(
                f"spawn {idx}: placed only {len(accepted)}/{spawn.count} particles "
                f"at spacing {2 * spawn.r_a:g}"
            )
        placed.extend(accepted)
        velocities.extend([np.asarray(spawn.v0, dtype=np.float64)] * spawn.count)
        radii.extend([(spawn.r_a, spawn.r_b)] * spawn.count)
        occupied = np.concatenate([occupied, np.array(accepted)])

    if not placed:
        raise InvalidScenario("no particles")
    x = np.array(placed)
    v = np.array(velocities)
    r_a = np.array([r[0] for r in radii])
    r_b = np.array([r[1] for r in radii])
    return make_particles(x, v, r_a, r_b)


def param_values(sc: Scenario):
    """Inline scalars as materialized values, or the fitted model if given."""
    if sc.material.model_path:
        return ParamModel.load(sc.material.model_path)
    return ParamValues(
        epsilon=sc.material.epsilon,
        k=sc.material.k,
        alpha=sc.active.alpha,
        beta=sc.active.beta,
        d_l=sc.active.d_l,
        d1=sc.active.d1,
        d2=sc.active.d2,
        noise_sigma=sc.active.noise_sigma,
    )


def body_config(sc: Scenario) -> Optional[BodyForceConfig]:
    bf = sc.body_force
    if bf.kind == "none":
        return None
    if bf.kind == "goal":
        return BodyForceConfig(kind="goal", goal=tuple(bf.goal), v_d=bf.v_d)
    return BodyForceConfig(kind="centripetal", center=tuple(bf.center), radius=bf.radius)


def cfl_limit(sc: Scenario) -> float:
    """Largest stable dt given the spawn velocities."""
    from ..mpm.stepper import CFL_FRACTION

    vmax = max((np.hypot(*s.v0) for s in sc.spawns), default=0.0)
    return CFL_FRACTION * sc.dx / (vmax + 1e-6)
