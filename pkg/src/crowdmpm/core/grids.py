"""Background grid containers and grid-sampled fields.

Node (ix, iy) sits at ``origin + (ix*dx, iy*dx)``; field values are stored as
(nx, ny) scalars or (nx, ny, 2) vectors indexed [ix, iy]. Grids are padded by
ghost cells beyond the simulation domain so every interior particle keeps a
full 3x3 quadratic B-spline stencil.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from ..backends import numpy_ops, ops_for
from ..errors import BadMagic, DimMismatch, TruncatedFile

GHOST_CELLS = 2
MASS_EPSILON = 1e-10

_CMF_MAGIC = b"CMF1"


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a node grid: counts, cell size, and origin in pixels."""

    nx: int
    ny: int
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs nx, ny >= 4, got {self.nx}x{self.ny}")
        if self.dx <= 0:
            raise ValueError("dx must be > 0")

    @classmethod
    def for_domain(cls, width: float, height: float, dx: float, pad: int = GHOST_CELLS) -> "GridSpec":
        """Grid covering [0,width]x[0,height] plus `pad` ghost cells per side."""
        nx = int(math.ceil(width / dx)) + 1 + 2 * pad
        ny = int(math.ceil(height / dx)) + 1 + 2 * pad
        return cls(nx=nx, ny=ny, dx=float(dx), origin=(-pad * dx, -pad * dx))

    @classmethod
    def for_image(cls, width: int, height: int, dx: float, pad: int = GHOST_CELLS) -> "GridSpec":
        """Grid covering a width x height pixel image (pixel centers at i+0.5)."""
        return cls.for_domain(float(width), float(height), dx, pad=pad)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def node_coords(self) -> np.ndarray:
        """(nx, ny, 2) array of node positions in pixels."""
        xs = self.origin[0] + self.dx * np.arange(self.nx, dtype=np.float64)
        ys = self.origin[1] + self.dx * np.arange(self.ny, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx, gy], axis=-1)

    def interior_bounds(self, margin: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
        """Position bounds (lo, hi) inside which a full 3x3 stencil exists."""
        ox, oy = self.origin
        lo = np.array([ox + (0.5 + margin) * self.dx, oy + (0.5 + margin) * self.dx])
        hi = np.array(
            [
                ox + (self.nx - 1.5 - margin) * self.dx,
                oy + (self.ny - 1.5 - margin) * self.dx,
            ]
        )
        return lo, hi


@dataclass
class ScalarField:
    spec: GridSpec
    values: object = None  # (nx, ny) array, numpy or torch

    def __post_init__(self):
        if self.values is None:
            self.values = numpy_ops.zeros((self.spec.nx, self.spec.ny))

    def to_numpy(self) -> np.ndarray:
        return ops_for(self.values).to_numpy(self.values)


@dataclass
class VectorField:
    spec: GridSpec
    values: object = None  # (nx, ny, 2) array, numpy or torch

    def __post_init__(self):
        if self.values is None:
            self.values = numpy_ops.zeros((self.spec.nx, self.spec.ny, 2))

    def to_numpy(self) -> np.ndarray:
        return ops_for(self.values).to_numpy(self.values)


@dataclass
class Grid:
    """Per-step Eulerian accumulators over a GridSpec.

    mass/momentum are filled by P2G; velocity is momentum/mass where
    mass > MASS_EPSILON and zero elsewhere; force is assembled before the
    grid update.
    """

    spec: GridSpec
    mass: object = None
    momentum: object = None
    velocity: object = None
    force: object = None


def _check_same_spec(a: GridSpec, b: GridSpec):
    if (a.nx, a.ny) != (b.nx, b.ny) or a.dx != b.dx or a.origin != b.origin:
        raise DimMismatch(f"grid specs differ: {a} vs {b}")


# ---------------------------------------------------------------------------
# Serialization. CSV: header names, header values, then one row per node in
# row-major (ix-major) order. CMF1 binary: magic, int32 nx/ny/ncomp, f64
# dx/origin, then row-major little-endian f64 payload.
# ---------------------------------------------------------------------------


def _field_parts(f) -> tuple[GridSpec, np.ndarray, int]:
    vals = f.to_numpy()
    if vals.shape[:2] != (f.spec.nx, f.spec.ny):
        raise DimMismatch(
            f"field values {vals.shape} do not match spec {f.spec.nx}x{f.spec.ny}"
        )
    ncomp = 1 if vals.ndim == 2 else vals.shape[2]
    return f.spec, vals.reshape(f.spec.nx * f.spec.ny, ncomp), ncomp


def write_field_csv(f, path):
    spec, flat, ncomp = _field_parts(f)
    with open(path, "w", newline="") as fh:
        fh.write("nx,ny,dx,origin_x,origin_y\n")
        fh.write(f"{spec.nx},{spec.ny},{spec.dx!r},{spec.origin[0]!r},{spec.origin[1]!r}\n")
        for row in flat:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_field_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["nx", "ny"]:
            raise BadMagic(f"not a field CSV: {path}")
        nx, ny, dx, ox, oy = fh.readline().strip().split(",")
        spec = GridSpec(int(nx), int(ny), float(dx), (float(ox), float(oy)))
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) != spec.n_nodes:
        raise TruncatedFile(f"expected {spec.n_nodes} rows, got {len(rows)}")
    vals = np.array(rows, dtype=np.float64)
    if vals.shape[1] == 1:
        return ScalarField(spec, vals.reshape(spec.nx, spec.ny))
    return VectorField(spec, vals.reshape(spec.nx, spec.ny, vals.shape[1]))


def write_field_binary(f, path):
    spec, flat, ncomp = _field_parts(f)
    with open(path, "wb") as fh:
        fh.write(_CMF_MAGIC)
        fh.write(struct.pack("<iii", spec.nx, spec.ny, ncomp))
        fh.write(struct.pack("<ddd", spec.dx, spec.origin[0], spec.origin[1]))
        fh.write(flat.astype("<f8").tobytes())


def read_field_binary(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _CMF_MAGIC:
        raise BadMagic(f"bad magic in {path}: {data[:4]!r}")
    buf = io.BytesIO(data[4:])
    try:
        nx, ny, ncomp = struct.unpack("<iii", buf.read(12))
        dx, ox, oy = struct.unpack("<ddd", buf.read(24))
    except struct.error as e:
        raise TruncatedFile(str(e)) from e
    spec = GridSpec(nx, ny, dx, (ox, oy))
    payload = buf.read()
    expected = nx * ny * ncomp * 8
    if len(payload) < expected:
        raise TruncatedFile(f"{path}: want {expected} payload bytes, have {len(payload)}")
    vals = np.frombuffer(payload[:expected], dtype="<f8").reshape(nx, ny, ncomp).copy()
    if ncomp == 1:
        return ScalarField(spec, vals[..., 0])
    return VectorField(spec, vals)
