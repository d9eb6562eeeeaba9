"""Lagrangian particle state (one particle per individual) and snapshots.

Struct-of-arrays layout; every array is (N, ...) float64, numpy or torch.
Snapshot files carry magic "CMP1": magic, int64 count, then per-particle
little-endian f64 records [m, x, y, vx, vy, C00, C01, C10, C11, F00, F01,
F10, F11, r_a, r_b, V0]. A JSON manifest alongside lists the frames.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from ..backends import ops_for
from ..errors import BadMagic, TruncatedFile

_CMP_MAGIC = b"CMP1"
RECORD_FIELDS = 16  # m, x(2), v(2), C(4), F(4), r_a, r_b, V0

DENSITY = 1.0  # fixed; particle mass follows from the radius alone


@dataclass
class ParticleState:
    m: object  # (N,)
    x: object  # (N, 2)
    v: object  # (N, 2)
    C: object  # (N, 2, 2) affine velocity gradient, 1/frame
    F: object  # (N, 2, 2) deformation gradient
    r_a: object  # (N,) incompressible radius, px
    r_b: object  # (N,) comfort radius, px
    V0: object  # (N,) initial volume, px^2

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def copy(self) -> "ParticleState":
        ops = ops_for(self.x)
        return ParticleState(*(ops.copy(getattr(self, f)) for f in _FIELDS))

    def detached(self) -> "ParticleState":
        ops = ops_for(self.x)
        return ParticleState(*(ops.detach(getattr(self, f)) for f in _FIELDS))

    def to_numpy(self) -> "ParticleState":
        ops = ops_for(self.x)
        return ParticleState(*(ops.to_numpy(getattr(self, f)) for f in _FIELDS))

    def to_backend(self, ops) -> "ParticleState":
        return ParticleState(*(ops.asarray(ops_for(self.x).to_numpy(getattr(self, f))) for f in _FIELDS))

    def select(self, keep: np.ndarray) -> "ParticleState":
        return ParticleState(*(getattr(self, f)[keep] for f in _FIELDS))


_FIELDS = ["m", "x", "v", "C", "F", "r_a", "r_b", "V0"]


def make_particles(x: np.ndarray, v: np.ndarray, r_a, r_b) -> ParticleState:
    """Fresh particles at rest deformation: F=I, C=0, m = pi r_a^2 * density."""
    x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), x.shape).copy()
    n = x.shape[0]
    r_a = np.broadcast_to(np.asarray(r_a, dtype=np.float64), (n,)).copy()
    r_b = np.broadcast_to(np.asarray(r_b, dtype=np.float64), (n,)).copy()
    if np.any(r_a <= 0) or np.any(r_b <= r_a):
        raise ValueError("need r_b > r_a > 0")
    m = math.pi * r_a**2 * DENSITY
    return ParticleState(
        m=m,
        x=x,
        v=v,
        C=np.zeros((n, 2, 2)),
        F=np.tile(np.eye(2), (n, 1, 1)),
        r_a=r_a,
        r_b=r_b,
        V0=m / DENSITY,
    )


def jacobians(state: ParticleState):
    """det(F) per particle."""
    F = state.F
    return F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]


def write_snapshot(state: ParticleState, path):
    s = state.to_numpy()
    rec = np.concatenate(
        [
            s.m[:, None],
            s.x,
            s.v,
            s.C.reshape(-1, 4),
            s.F.reshape(-1, 4),
            s.r_a[:, None],
            s.r_b[:, None],
            s.V0[:, None],
        ],
        axis=1,
    )
    with open(path, "wb") as fh:
        fh.write(_CMP_MAGIC)
        fh.write(struct.pack("<q", rec.shape[0]))
        fh.write(rec.astype("<f8").tobytes())


def read_snapshot(path) -> ParticleState:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _CMP_MAGIC:
        raise BadMagic(f"bad magic in {path}: {data[:4]!r}")
    (n,) = struct.unpack("<q", data[4:12])
    expected = n * RECORD_FIELDS * 8
    payload = data[12:]
    if len(payload) < expected:
        raise TruncatedFile(f"{path}: want {expected} bytes, have {len(payload)}")
    rec = np.frombuffer(payload[:expected], dtype="<f8").reshape(n, RECORD_FIELDS)
    return ParticleState(
        m=rec[:, 0].copy(),
        x=rec[:, 1:3].copy(),
        v=rec[:, 3:5].copy(),
        C=rec[:, 5:9].reshape(-1, 2, 2).copy(),
        F=rec[:, 9:13].reshape(-1, 2, 2).copy(),
        r_a=rec[:, 13].copy(),
        r_b=rec[:, 14].copy(),
        V0=rec[:, 15].copy(),
    )
