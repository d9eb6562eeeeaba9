"""Scenario geometry rasterized to a signed distance field on the grid.

Convention: phi > 0 in free space, phi < 0 inside solid (walls, obstacles,
and everything beyond the domain box). The union of solids is the pointwise
minimum of the individual distances. Exits carve openings: nodes inside an
exit capsule are released from the velocity projection.
"""

from __future__ import annotations

import numpy as np

from ..core.grids import GridSpec

# nodes with phi below this many cells of clearance get projected
PROJECT_BAND = 1.0
# half-width of the opening carved around an exit segment, in cells
EXIT_HALF_WIDTH = 1.5


def rect_sdf(points: np.ndarray, x: float, y: float, w: float, h: float) -> np.ndarray:
    """Distance to an axis-aligned solid rectangle (negative inside)."""
    center = np.array([x + w / 2.0, y + h / 2.0])
    half = np.array([w / 2.0, h / 2.0])
    q = np.abs(points - center) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def circle_sdf(points: np.ndarray, cx: float, cy: float, r: float) -> np.ndarray:
    """Distance to a solid disk (negative inside)."""
    return np.linalg.norm(points - np.array([cx, cy]), axis=-1) - r


def domain_sdf(points: np.ndarray, width: float, height: float) -> np.ndarray:
    """Distance to the solid beyond the [0,width]x[0,height] box.

    Positive inside the box; this is the complement of rect_sdf on the box.
    """
    return -rect_sdf(points, 0.0, 0.0, width, height)


def segment_distance(points: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=-1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(points - closest, axis=-1)


class SdfBoundary:
    """Per-node projection data for the grid step.

    project: (n_nodes,) float mask, 1.0 where the normal velocity component
    is damped. normals: (n_nodes, 2) unit vectors pointing into free space.
    exit_mask: (n_nodes,) bool, nodes inside an exit opening (never projected).
    """

    def __init__(self, spec: GridSpec, phi: np.ndarray, exit_mask: np.ndarray):
        self.spec = spec
        self.phi = phi
        self.exit_mask = exit_mask

        grid_phi = phi.reshape(spec.nx, spec.ny)
        gx, gy = np.gradient(grid_phi, spec.dx, edge_order=2)
        normals = np.stack([gx, gy], axis=-1).reshape(spec.n_nodes, 2)
        norm = np.linalg.norm(normals, axis=-1, keepdims=True)
        self.normals = np.where(norm > 1e-12, normals / np.maximum(norm, 1e-12), 0.0)

        near_solid = phi < PROJECT_BAND * spec.dx
        self.project = np.where(near_solid & ~exit_mask, 1.0, 0.0)

    def phi_at(self, points: np.ndarray) -> np.ndarray:
        """Nearest-node phi lookup, for spawn clearance checks."""
        spec = self.spec
        ij = np.rint(
            (np.asarray(points, dtype=np.float64) - np.asarray(spec.origin)) / spec.dx
        ).astype(np.int64)
        ij[:, 0] = np.clip(ij[:, 0], 0, spec.nx - 1)
        ij[:, 1] = np.clip(ij[:, 1], 0, spec.ny - 1)
        return self.phi[ij[:, 0] * spec.ny + ij[:, 1]]


def build_sdf_boundary(spec: GridSpec, width, height, walls=(), exits=()) -> SdfBoundary:
    """Rasterize domain box + wall primitives, then carve exit openings.

    walls: iterables of dicts {type: rect|circle, ...}; exits: dicts with
    endpoints x0,y0,x1,y1 (segments on the outer boundary or a wall face).
    """
    points = spec.node_coords().reshape(spec.n_nodes, 2)
    phi = domain_sdf(points, float(width), float(height))
    for wall in walls:
        kind = wall["type"]
        if kind == "rect":
            d = rect_sdf(points, wall["x"], wall["y"], wall["w"], wall["h"])
        elif kind == "circle":
            d = circle_sdf(points, wall["cx"], wall["cy"], wall["r"])
        else:
            raise ValueError(f"unknown wall type {kind!r}")
        phi = np.minimum(phi, d)

    exit_mask = np.zeros(spec.n_nodes, dtype=bool)
    for ex in exits:
        dist = segment_distance(points, (ex["x0"], ex["y0"]), (ex["x1"], ex["y1"]))
        exit_mask |= dist < EXIT_HALF_WIDTH * spec.dx

    return SdfBoundary(spec, phi, exit_mask)
