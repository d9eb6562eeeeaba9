"""Fitting parameters by gradient descent through the simulator.

The observed sequence is converted to node velocity fields once, up front.
Each training iteration then

  1. rolls the whole sequence forward without gradients under the current
     parameters, caching the particle state at every frame,
  2. draws a batch of rollout windows, restarts each from its cached state
     with particle velocity and affine matrix re-sampled from the observed
     field at the window's first frame (teacher forcing),
  3. replays the windows on the gradient tape, comparing the transferred
     node velocities against the observed fields on supervised frames,
  4. takes an Adam step on the mean window loss, with the learning rate
     decayed geometrically.

Windows keep gradients local: backpropagation never crosses a window
boundary. Stochastic forcing is reparameterized -- the per-frame noise draw
is fixed by (seed, frame index), and the tape differentiates through the
noise amplitude only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..backends import numpy_ops, ops_for, torch_ops
from ..core.grids import GridSpec, VectorField
from ..core.kernels import sample_field, stencils_for
from ..errors import (
    Diverged,
    NonFiniteField,
    NonFiniteForce,
    NonFiniteGradient,
    StabilityViolation,
)
from ..flow import FlowFrame, FlowSequence, flow_to_field
from ..mpm.engine import crowd_step
from ..mpm.particles import ParticleState, make_particles
from ..mpm.stepper import StepConfig, p2g
from .losses import frame_mse
from .params import ParamModel


@dataclass
class TrainConfig:
    epochs: int = 100
    window: int = 12  # rollout length in frames
    batch: int = 4  # windows per iteration
    lr: float = 1e-4
    lr_decay: float = 0.9
    lr_decay_every: int = 50
    mask_fraction: float = 0.0  # fraction of frames hidden from the loss
    train_only: tuple = ()  # parameter names to optimize; empty = all
    seed: int = 0
    r_a: float = 5.0
    r_b: float = 10.0
    gamma: float = 0.9


@dataclass
class Observations:
    """Velocity-field supervision: one field per frame, uneven timestamps ok."""

    fields: list  # list[VectorField], numpy values
    timestamps: list

    def __post_init__(self):
        if len(self.fields) < 2:
            raise ValueError("need at least 2 frames to fit dynamics")
        if len(self.timestamps) != len(self.fields):
            raise ValueError("one timestamp per field required")
        ts = list(self.timestamps)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must strictly increase")

    @classmethod
    def from_sequence(cls, seq: FlowSequence, spec: GridSpec | None = None) -> "Observations":
        spec = spec or seq.grid_spec()
        return cls(
            fields=[flow_to_field(f, spec) for f in seq.frames],
            timestamps=[f.timestamp for f in seq.frames],
        )

    @property
    def spec(self) -> GridSpec:
        return self.fields[0].spec

    def dts(self) -> list:
        return [b - a for a, b in zip(self.timestamps, self.timestamps[1:])]


def sample_particles_from_flow(
    frame: FlowFrame, spec: GridSpec, r_a: float, r_b: float, seed: int = 0,
    threshold: float = 0.1,
) -> ParticleState:
    """Poisson-disk particle seeding over the high-flow-magnitude region.

    Pixels with |flow| > threshold * max|flow| are candidates; dart throwing
    at spacing 2 r_a then keeps a blue-noise subset. Velocities come from the
    converted field."""
    mag = np.sqrt((frame.uv**2).sum(-1)) * frame.mask
    peak = mag.max()
    if peak <= 0:
        raise ValueError("flow is identically zero; nothing to seed from")
    candidates = frame.pixel_centers()[(mag > threshold * peak).reshape(-1)]
    rng = np.random.default_rng(seed)
    rng.shuffle(candidates)

    lo, hi = spec.interior_bounds(margin=0.01)
    spacing = 2.0 * r_a
    cell = spacing / np.sqrt(2.0)
    taken: dict[tuple[int, int], np.ndarray] = {}
    accepted = []
    for pos in candidates:
        if (pos < lo).any() or (pos > hi).any():
            continue
        ci, cj = int(pos[0] // cell), int(pos[1] // cell)
        ok = True
        for di in range(-2, 3):
            for dj in range(-2, 3):
                q = taken.get((ci + di, cj + dj))
                if q is not None and np.linalg.norm(q - pos) < spacing:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            taken[(ci, cj)] = pos
            accepted.append(pos)
    if not accepted:
        raise ValueError("no particle sites survived thresholding")
    x = np.asarray(accepted)
    state = make_particles(x, [0.0, 0.0], r_a, r_b)
    return resample_kinematics(state, flow_to_field(frame, spec))


def resample_kinematics(state: ParticleState, f: VectorField) -> ParticleState:
    """Teacher forcing: pull v_p and C_p from a field, keep x_p, F_p."""
    ops = ops_for(state.x)
    st = stencils_for(state.x, f.spec)
    flat = ops.asarray(numpy_ops.to_numpy(f.values)).reshape(-1, 2)
    v = sample_field(flat, st)
    g = ops.gather(flat, st.flat_idx)
    C = (4.0 / f.spec.dx**2) * ops.einsum("nij,nija,nijb->nab", st.weights, g, st.dpos)
    return replace(state, v=v, C=C)


def transferred_field(state: ParticleState, spec: GridSpec):
    """Node velocities the observer would see for this state (flat array)."""
    st = stencils_for(state.x, spec)
    return p2g(state, st).velocity


def supervised_frames(n_frames: int, mask_fraction: float, seed: int) -> tuple:
    """Frames 1..n-1 minus a seeded random mask; at least one survives."""
    frames = list(range(1, n_frames))
    if mask_fraction <= 0:
        return tuple(frames)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(977,)))
    keep = rng.random(len(frames)) >= mask_fraction
    kept = [f for f, k in zip(frames, keep) if k]
    if not kept:
        kept = [frames[rng.integers(len(frames))]]
    return tuple(kept)


def _forward_cache(state0, obs, model, cfg, body, boundary):
    """No-grad rollout of the whole sequence; state at every frame index."""
    cache = [state0]
    state = state0
    for i, dt in enumerate(obs.dts()):
        step_cfg = StepConfig(dt=dt, gamma=cfg.gamma, seed=cfg.seed)
        state, _ = crowd_step(
            state, obs.spec, step_cfg, params=model,
            body=body, boundary=boundary, step_index=i,
        )
        cache.append(state)
    return cache


def window_loss(
    start_state: ParticleState,
    obs: Observations,
    start: int,
    n_steps: int,
    model: ParamModel,
    cfg: TrainConfig,
    supervised: tuple,
    body=None,
    boundary=None,
):
    """Teacher-forced window loss vs observed fields; None if unsupervised."""
    spec = obs.spec
    state = resample_kinematics(start_state, obs.fields[start])
    if ops_for(model.theta).name == "torch":
        state = state.to_backend(torch_ops())
    dts = obs.dts()
    total, count = None, 0
    for s in range(n_steps):
        frame = start + s
        if frame >= len(dts):
            break
        step_cfg = StepConfig(dt=dts[frame], gamma=cfg.gamma, seed=cfg.seed)
        state, _ = crowd_step(
            state, spec, step_cfg, params=model,
            body=body, boundary=boundary, step_index=frame,
        )
        t = frame + 1
        if t in supervised:
            ops = ops_for(state.x)
            target = ops.asarray(numpy_ops.to_numpy(obs.fields[t].values)).reshape(-1, 2)
            mse = frame_mse(transferred_field(state, spec), target)
            total = mse if total is None else total + mse
            count += 1
    if count == 0:
        return None, 0
    return total / count, count


def gradient(loss_fn, model: ParamModel) -> np.ndarray:
    """dLoss/dtheta by reverse-mode differentiation through the rollout.

    loss_fn receives the model with a gradient-tracking theta and must return
    a backend scalar built from it."""
    ops = torch_ops()
    t = ops.torch
    theta = t.tensor(np.asarray(model.to_numpy().theta), dtype=t.float64, requires_grad=True)
    loss = loss_fn(model.with_theta(theta))
    loss.backward()
    if theta.grad is None:
        return np.zeros(model.size)
    g = theta.grad.detach().cpu().numpy()
    if not np.isfinite(g).all():
        raise NonFiniteGradient(f"non-finite entries in dLoss/dtheta: {g}")
    return g


def _grad_mask(model: ParamModel, train_only) -> np.ndarray | None:
    if not train_only:
        return None
    mask = np.zeros(model.size)
    layout = model.slices()
    for name in train_only:
        if name not in layout:
            raise KeyError(f"unknown parameter {name!r}; have {sorted(layout)}")
        mask[layout[name]] = 1.0
    return mask


@dataclass
class TrainResult:
    model: ParamModel
    history: list  # [{"iteration", "loss", "lr"}]
    supervised: tuple


def train(
    obs: Observations | FlowSequence,
    model: ParamModel,
    cfg: TrainConfig,
    state0: ParticleState | None = None,
    body=None,
    boundary=None,
) -> TrainResult:
    if isinstance(obs, FlowSequence):
        seq = obs
        obs = Observations.from_sequence(seq)
        if state0 is None:
            state0 = sample_particles_from_flow(
                seq.frames[0], obs.spec, cfg.r_a, cfg.r_b, seed=cfg.seed
            )
    if state0 is None:
        raise ValueError("state0 required when training from pre-built fields")

    ops = torch_ops()
    t = ops.torch
    theta = t.tensor(np.asarray(model.to_numpy().theta), dtype=t.float64, requires_grad=True)
    optimizer = t.optim.Adam([theta], lr=cfg.lr)
    scheduler = t.optim.lr_scheduler.LambdaLR(
        optimizer, lambda it: cfg.lr_decay ** (it / cfg.lr_decay_every)
    )
    mask = _grad_mask(model, cfg.train_only)
    mask_t = None if mask is None else t.tensor(mask, dtype=t.float64)

    supervised = supervised_frames(len(obs.fields), cfg.mask_fraction, cfg.seed)
    n_frames = len(obs.fields)
    window = min(cfg.window, n_frames - 1)
    history = []
    last_good = model.to_numpy()

    for it in range(cfg.epochs):
        frozen = model.with_theta(theta.detach().cpu().numpy())

        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, it)))
        hi = max(n_frames - window, 1)
        starts = rng.integers(0, hi, size=cfg.batch)

        live = model.with_theta(theta)
        optimizer.zero_grad()
        batch_total, batch_count = None, 0
        try:
            cache = _forward_cache(state0, obs, frozen, cfg, body, boundary)
            for start in starts:
                loss, count = window_loss(
                    cache[start].detached(), obs, int(start), window, live, cfg,
                    supervised, body=body, boundary=boundary,
                )
                if loss is None:
                    continue
                batch_total = loss if batch_total is None else batch_total + loss
                batch_count += 1
        except (StabilityViolation, NonFiniteForce, NonFiniteField) as exc:
            raise Diverged(
                f"rollout failed at iteration {it}: {exc}", last_good=last_good
            ) from exc
        if batch_count == 0:
            scheduler.step()
            continue
        batch_loss = batch_total / batch_count
        loss_val = float(batch_loss.detach())
        if not np.isfinite(loss_val):
            raise Diverged(
                f"loss became non-finite at iteration {it}", last_good=last_good
            )
        batch_loss.backward()
        if theta.grad is not None:
            if not t.isfinite(theta.grad).all():
                raise Diverged(
                    f"gradient became non-finite at iteration {it}", last_good=last_good
                )
            if mask_t is not None:
                theta.grad.mul_(mask_t)
        optimizer.step()
        scheduler.step()
        last_good = model.with_theta(theta.detach().cpu().numpy().copy())
        history.append(
            {"iteration": it, "loss": loss_val, "lr": float(scheduler.get_last_lr()[0])}
        )

    return TrainResult(model=last_good, history=history, supervised=supervised)


def predict_fields(
    state0: ParticleState,
    model: ParamModel | None,
    obs_or_spec,
    dts=None,
    cfg: TrainConfig | None = None,
    body=None,
    boundary=None,
) -> list:
    """Free rollout producing the transferred node field at every frame."""
    if isinstance(obs_or_spec, Observations):
        spec, dts = obs_or_spec.spec, obs_or_spec.dts()
    else:
        spec = obs_or_spec
        if dts is None:
            raise ValueError("dts required when passing a bare grid spec")
    cfg = cfg or TrainConfig()
    fields = [VectorField(spec, np.asarray(transferred_field(state0, spec)).reshape(spec.nx, spec.ny, 2))]
    state = state0
    for i, dt in enumerate(dts):
        step_cfg = StepConfig(dt=dt, gamma=cfg.gamma, seed=cfg.seed)
        state, _ = crowd_step(
            state, spec, step_cfg, params=model, body=body, boundary=boundary, step_index=i
        )
        fields.append(
            VectorField(spec, np.asarray(transferred_field(state, spec)).reshape(spec.nx, spec.ny, 2))
        )
    return fields
