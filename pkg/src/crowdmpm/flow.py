"""Optical-flow frames: .flo I/O, grid conversion, noise injection.

A frame stores per-pixel displacement (u, v) in pixels/frame with pixel (row,
col) centered at (col + 0.5, row + 0.5). Files use the Middlebury layout:
magic "PIEH", int32 width, int32 height, then row-major interleaved float32
(u, v), little-endian. Components with magnitude above 1e9 mark missing data;
they read back as zero with the pixel masked out.

Grid conversion treats every valid pixel as a unit-mass particle: to-field is
a plain particles-to-grid transfer (momentum over mass), from-field samples
the node field at pixel centers with the same B-spline stencil. The composite
smooths but never amplifies: constants pass through exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .backends import numpy_ops
from .core.grids import MASS_EPSILON, GridSpec, VectorField
from .core.kernels import sample_field, stencils_for
from .errors import BadMagic, DimMismatch, TruncatedFile

_FLO_MAGIC = b"PIEH"
SENTINEL = 1e9  # |component| above this marks an unknown pixel
_SENTINEL_WRITE = np.float32(1e10)

DEFAULT_NOISE_BOX = ((-0.7, 0.7), (-0.8, 0.8))


@dataclass
class FlowFrame:
    width: int
    height: int
    uv: np.ndarray  # (height, width, 2) float, pixels/frame
    mask: np.ndarray = None  # (height, width) bool, True where valid
    timestamp: float = 0.0

    def __post_init__(self):
        self.uv = np.asarray(self.uv, dtype=np.float64)
        if self.uv.shape != (self.height, self.width, 2):
            raise DimMismatch(
                f"uv shape {self.uv.shape} != ({self.height}, {self.width}, 2)"
            )
        if self.mask is None:
            self.mask = np.ones((self.height, self.width), dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)

    def pixel_centers(self) -> np.ndarray:
        """(H*W, 2) positions in pixel coordinates, row-major order."""
        cols = np.arange(self.width, dtype=np.float64) + 0.5
        rows = np.arange(self.height, dtype=np.float64) + 0.5
        cx, cy = np.meshgrid(cols, rows)  # (H, W)
        return np.stack([cx, cy], axis=-1).reshape(-1, 2)


def write_flo(frame: FlowFrame, path):
    data = frame.uv.astype("<f4")
    if not frame.mask.all():
        data = data.copy()
        data[~frame.mask] = _SENTINEL_WRITE
    with open(path, "wb") as fh:
        fh.write(_FLO_MAGIC)
        fh.write(struct.pack("<ii", frame.width, frame.height))
        fh.write(data.tobytes())


def read_flo(path, timestamp: float = 0.0) -> FlowFrame:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _FLO_MAGIC:
        raise BadMagic(f"bad magic in {path}: {raw[:4]!r}")
    try:
        w, h = struct.unpack("<ii", raw[4:12])
    except struct.error as e:
        raise TruncatedFile(str(e)) from e
    expected = w * h * 2 * 4
    payload = raw[12:]
    if len(payload) < expected:
        raise TruncatedFile(f"{path}: want {expected} payload bytes, have {len(payload)}")
    uv = np.frombuffer(payload[:expected], dtype="<f4").reshape(h, w, 2).astype(np.float64)
    missing = (np.abs(uv) > SENTINEL).any(axis=-1)
    if missing.any():
        uv = uv.copy()
        uv[missing] = 0.0
    return FlowFrame(width=w, height=h, uv=uv, mask=~missing, timestamp=timestamp)


@dataclass
class FlowSequence:
    frames: list
    dx: float
    width: int
    height: int

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a flow sequence needs at least one frame")
        ts = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"timestamps must strictly increase, got {ts}")
        for f in self.frames:
            if (f.width, f.height) != (self.width, self.height):
                raise DimMismatch(
                    f"frame {f.width}x{f.height} in a {self.width}x{self.height} sequence"
                )

    @property
    def timestamps(self):
        return [f.timestamp for f in self.frames]

    def grid_spec(self) -> GridSpec:
        return GridSpec.for_image(self.width, self.height, self.dx)


def write_sequence(seq: FlowSequence, directory, prefix: str = "frame") -> Path:
    """Writes frame_NNNN.flo files plus manifest.json; returns manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, frame in enumerate(seq.frames):
        name = f"{prefix}_{i:04d}.flo"
        write_flo(frame, directory / name)
        entries.append({"file": name, "t": frame.timestamp})
    manifest = {
        "frames": entries,
        "dx": seq.dx,
        "width": seq.width,
        "height": seq.height,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def read_sequence(manifest_path) -> FlowSequence:
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text())
    frames = [
        read_flo(manifest_path.parent / e["file"], timestamp=float(e["t"]))
        for e in meta["frames"]
    ]
    return FlowSequence(
        frames=frames, dx=float(meta["dx"]), width=int(meta["width"]), height=int(meta["height"])
    )


def flow_to_field(frame: FlowFrame, spec: GridSpec) -> VectorField:
    """P2G of unit-mass pixel particles; zero velocity on empty nodes."""
    valid = frame.mask.reshape(-1)
    x = frame.pixel_centers()[valid]
    uv = frame.uv.reshape(-1, 2)[valid]
    values = np.zeros((spec.nx, spec.ny, 2))
    if len(x):
        st = stencils_for(x, spec)
        idx = st.flat_idx.reshape(-1)
        mass = np.zeros(spec.n_nodes)
        np.add.at(mass, idx, st.weights.reshape(-1))
        mom = np.zeros((spec.n_nodes, 2))
        np.add.at(mom, idx, (st.weights[..., None] * uv[:, None, None, :]).reshape(-1, 2))
        occupied = mass > MASS_EPSILON
        vel = np.where(occupied[:, None], mom / np.where(occupied, mass, 1.0)[:, None], 0.0)
        values = vel.reshape(spec.nx, spec.ny, 2)
    return VectorField(spec, values)


def field_to_flow(
    f: VectorField, width: int, height: int, timestamp: float = 0.0
) -> FlowFrame:
    """Sample the node field at every pixel center."""
    probe = FlowFrame(width=width, height=height, uv=np.zeros((height, width, 2)))
    st = stencils_for(probe.pixel_centers(), f.spec)
    flat = numpy_ops.to_numpy(f.values).reshape(-1, 2)
    uv = sample_field(flat, st).reshape(height, width, 2)
    return FlowFrame(width=width, height=height, uv=uv, timestamp=timestamp)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str  # gaussian | uniform | mixture
    std: float = 0.0
    prob: float = 0.0
    box: tuple = DEFAULT_NOISE_BOX
    w_g: float = 0.5
    w_u: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "mixture"):
            raise ValueError(f"unknown noise kind {self.kind!r}")


def _gaussian_delta(rng, shape, std):
    return rng.normal(0.0, std, shape) if std > 0 else np.zeros(shape)


def _uniform_delta(rng, shape, prob, box):
    h, w, _ = shape
    hit = rng.random((h, w)) < prob
    sample = np.stack(
        [rng.uniform(box[0][0], box[0][1], (h, w)), rng.uniform(box[1][0], box[1][1], (h, w))],
        axis=-1,
    )
    return hit[..., None] * sample


def inject_noise(frame: FlowFrame, spec: NoiseSpec) -> FlowFrame:
    """Additive corruption on valid pixels; masked pixels stay untouched."""
    rng = np.random.default_rng(spec.seed)
    shape = frame.uv.shape
    if spec.kind == "gaussian":
        delta = _gaussian_delta(rng, shape, spec.std)
    elif spec.kind == "uniform":
        delta = _uniform_delta(rng, shape, spec.prob, spec.box)
    else:
        delta = spec.w_g * _gaussian_delta(rng, shape, spec.std) + spec.w_u * _uniform_delta(
            rng, shape, spec.prob, spec.box
        )
    uv = frame.uv + frame.mask[..., None] * delta
    return replace(frame, uv=uv, mask=frame.mask.copy())
