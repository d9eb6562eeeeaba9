"""Learnable parameter models for the crowd material and active forces.

One flat vector theta carries every learnable quantity; positivity of
epsilon, k, beta, D_L, D1, D2 and noise_sigma is enforced by a softplus
transform of the raw entries (alpha stays unconstrained -- it is negative in
disordered crowds). Three representations:

  global-scalars        one value per parameter
  per-particle-table    epsilon and k free per particle, the rest global
  neighborhood-features epsilon_p, k_p from a small dense network over
                        [x_p, v_p, radially weighted mean relative neighbor
                        position, same for velocity]; the rest global

Models serialize to JSON {"repr", "theta", "transforms", "meta",
"schema_version": 1} and can hand out their values under either array
backend, so the same model drives the fast simulator and the gradient tape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..backends import numpy_ops, ops_for
from ..mpm.particles import ParticleState

SCHEMA_VERSION = 1

GLOBAL_NAMES = ("epsilon", "k", "alpha", "beta", "d_l", "d1", "d2", "noise_sigma")
POSITIVE = {"epsilon", "k", "beta", "d_l", "d1", "d2", "noise_sigma"}

_RAW_FLOOR = -20.0  # softplus(-20) ~ 2e-9: effectively zero, still smooth


def softplus_inverse(y: float) -> float:
    if y < 0:
        raise ValueError(f"positive parameter initialized to {y}")
    if y < 2e-9:
        return _RAW_FLOOR
    if y > 30:
        return float(y)
    return float(math.log(math.expm1(y)))


@dataclass
class ParamValues:
    """Materialized parameters: scalars, or (N,) arrays for epsilon/k."""

    epsilon: object
    k: object
    alpha: object
    beta: object
    d_l: object
    d1: object
    d2: object
    noise_sigma: object


@dataclass
class ParamModel:
    representation: str  # global-scalars | per-particle-table | neighborhood-features
    theta: object  # flat (D,) array, numpy or torch
    meta: dict = field(default_factory=dict)

    # -- constructors -------------------------------------------------------

    @classmethod
    def global_scalars(cls, **initial) -> "ParamModel":
        theta = np.array(
            [_raw_init(name, initial.get(name, _DEFAULTS[name])) for name in GLOBAL_NAMES]
        )
        return cls("global-scalars", theta)

    @classmethod
    def per_particle_table(cls, n_particles: int, **initial) -> "ParamModel":
        eps = _raw_init("epsilon", initial.get("epsilon", _DEFAULTS["epsilon"]))
        k = _raw_init("k", initial.get("k", _DEFAULTS["k"]))
        tail = [
            _raw_init(name, initial.get(name, _DEFAULTS[name])) for name in GLOBAL_NAMES[2:]
        ]
        theta = np.concatenate(
            [np.full(n_particles, eps), np.full(n_particles, k), np.array(tail)]
        )
        return cls("per-particle-table", theta, {"n_particles": int(n_particles)})

    @classmethod
    def neighborhood_features(
        cls,
        hidden: int = 32,
        domain_scale: float = 100.0,
        seed: int = 0,
        **initial,
    ) -> "ParamModel":
        """2 hidden tanh layers of `hidden` units over 8 per-particle features."""
        sizes = [(8, hidden), (hidden, hidden), (hidden, 2)]
        rng = np.random.default_rng(seed)
        blocks = []
        for n_in, n_out in sizes:
            blocks.append(rng.normal(0.0, 1.0 / np.sqrt(n_in), n_in * n_out))
            blocks.append(np.zeros(n_out))
        # zero-init the output weights and seed its biases at the requested
        # values, so the untrained network is a constant map at those values
        blocks[-2] = np.zeros_like(blocks[-2])
        blocks[-1] = np.array(
            [
                _raw_init("epsilon", initial.get("epsilon", _DEFAULTS["epsilon"])),
                _raw_init("k", initial.get("k", _DEFAULTS["k"])),
            ]
        )
        tail = [
            _raw_init(name, initial.get(name, _DEFAULTS[name])) for name in GLOBAL_NAMES[2:]
        ]
        theta = np.concatenate(blocks + [np.array(tail)])
        meta = {"hidden": int(hidden), "domain_scale": float(domain_scale)}
        return cls("neighborhood-features", theta, meta)

    # -- bookkeeping --------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.theta.shape[0])

    def with_theta(self, theta) -> "ParamModel":
        return replace(self, theta=theta)

    def to_numpy(self) -> "ParamModel":
        ops = ops_for(self.theta)
        return self.with_theta(ops.to_numpy(ops.detach(self.theta)))

    def _nn_sizes(self):
        h = self.meta["hidden"]
        return [(8, h), (h, h), (h, 2)]

    def _tail_offset(self) -> int:
        if self.representation == "global-scalars":
            return 0
        if self.representation == "per-particle-table":
            return 2 * self.meta["n_particles"]
        return sum(i * o + o for i, o in self._nn_sizes())

    def slices(self) -> dict:
        """Name -> slice into theta, for freezing/training parameter subsets.

        For the network representation, "epsilon" and "k" both alias the
        whole weight block (they are joint outputs of the same network)."""
        off = self._tail_offset()
        out = {}
        if self.representation == "global-scalars":
            for i, name in enumerate(GLOBAL_NAMES):
                out[name] = slice(i, i + 1)
            return out
        if self.representation == "per-particle-table":
            n = self.meta["n_particles"]
            out["epsilon"] = slice(0, n)
            out["k"] = slice(n, 2 * n)
        else:
            out["epsilon"] = out["k"] = out["network"] = slice(0, off)
        for i, name in enumerate(GLOBAL_NAMES[2:]):
            out[name] = slice(off + i, off + i + 1)
        return out

    # -- evaluation ---------------------------------------------------------

    def values(self, state: ParticleState | None = None, pairs=None) -> ParamValues:
        """Current parameter values; state/pairs needed by per-particle reprs."""
        ops = ops_for(self.theta)
        if self.representation == "global-scalars":
            eps = ops.softplus(self.theta[0])
            k = ops.softplus(self.theta[1])
            tail = self.theta[2:]
        elif self.representation == "per-particle-table":
            n = self.meta["n_particles"]
            if state is not None and state.n != n:
                raise ValueError(f"table built for {n} particles, state has {state.n}")
            eps = ops.softplus(self.theta[:n])
            k = ops.softplus(self.theta[n : 2 * n])
            tail = self.theta[2 * n :]
        else:
            if state is None:
                raise ValueError("neighborhood-features model needs particle state")
            raw = self._nn_forward(state, pairs)
            eps = ops.softplus(raw[:, 0])
            k = ops.softplus(raw[:, 1])
            tail = self.theta[self._tail_offset() :]
        return ParamValues(
            epsilon=eps,
            k=k,
            alpha=tail[0],
            beta=ops.softplus(tail[1]),
            d_l=ops.softplus(tail[2]),
            d1=ops.softplus(tail[3]),
            d2=ops.softplus(tail[4]),
            noise_sigma=ops.softplus(tail[5]),
        )

    def _nn_forward(self, state: ParticleState, pairs):
        ops = ops_for(self.theta)
        feats = particle_features(state, pairs, self.meta["domain_scale"])
        if ops is not ops_for(feats):  # theta on torch, features from numpy state
            feats = ops.asarray(numpy_ops.to_numpy(feats))
        h = feats
        off = 0
        for li, (n_in, n_out) in enumerate(self._nn_sizes()):
            W = self.theta[off : off + n_in * n_out].reshape(n_in, n_out)
            off += n_in * n_out
            b = self.theta[off : off + n_out]
            off += n_out
            # contraction written without BLAS so results are bit-reproducible
            # across thread counts
            h = (h[:, :, None] * W[None, :, :]).sum(1) + b[None, :]
            if li < 2:
                h = _tanh(ops, h)
        return h

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        model = self.to_numpy()
        transforms = {
            name: ("softplus" if name in POSITIVE else "identity") for name in GLOBAL_NAMES
        }
        return json.dumps(
            {
                "repr": model.representation,
                "theta": [float(v) for v in model.theta],
                "transforms": transforms,
                "meta": model.meta,
                "schema_version": SCHEMA_VERSION,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ParamModel":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema {doc.get('schema_version')}")
        return cls(doc["repr"], np.asarray(doc["theta"], dtype=np.float64), doc.get("meta", {}))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ParamModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


_DEFAULTS = {
    "epsilon": 1.0,
    "k": 1.0,
    "alpha": 0.0,
    "beta": 0.0,
    "d_l": 0.0,
    "d1": 0.0,
    "d2": 0.0,
    "noise_sigma": 0.0,
}


def _raw_init(name: str, value: float) -> float:
    if name in POSITIVE:
        return softplus_inverse(float(value))
    return float(value)


def _tanh(ops, x):
    if ops.name == "numpy":
        return np.tanh(x)
    return ops.torch.tanh(x)


def particle_features(state: ParticleState, pairs, domain_scale: float):
    """(N, 8) features: scaled position, velocity, and radially weighted
    mean relative neighbor position/velocity (zero for isolated particles)."""
    ops = ops_for(state.x)
    n = state.n
    agg_pos = ops.zeros((n, 2))
    agg_vel = ops.zeros((n, 2))
    weight = ops.zeros(n)
    if pairs is not None and len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        rel = state.x[j] - state.x[i]
        dist = ops.sqrt((rel**2).sum(1) + 1e-30)
        cutoff = state.r_b[i] + state.r_b[j]
        w = ops.maximum(1.0 - dist / cutoff, ops.zeros_like(dist))
        relv = state.v[j] - state.v[i]
        for sgn, a, b in ((1.0, i, j), (-1.0, j, i)):
            idx = ops.index(a)
            ops.scatter_add(agg_pos, idx, (sgn * w[:, None]) * rel)
            ops.scatter_add(agg_vel, idx, (sgn * w[:, None]) * relv)
            ops.scatter_add(weight, idx, w)
    denom = ops.maximum(weight, ops.full(weight.shape, 1e-12))[:, None]
    scale = float(domain_scale)
    rb = state.r_b[:, None]
    feats = [
        state.x / scale,
        state.v,
        (agg_pos / denom) / rb,
        agg_vel / denom,
    ]
    return ops.concatenate(feats, axis=1)
