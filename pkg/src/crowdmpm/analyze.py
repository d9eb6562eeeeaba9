"""Scalar diagnostics over simulated or observed fields.

Curl picks out rotational motion, divergence picks out local expansion or
contraction, and the stress map combines each particle's bulk stress with the
short-range pair repulsion it is experiencing, all rasterized onto grid nodes.
Maps are exported as CSV (the machine-readable contract) plus an 8-bit PNG
heatmap rendered with the fixed diverging colormap below; clients that draw
their own heatmaps should interpolate the same stops so the colors agree.
"""

from __future__ import annotations

import json
import math
import os
import re
from typing import Optional

import numpy as np

from .core.grids import (
    GridSpec,
    ScalarField,
    VectorField,
    read_field_binary,
    write_field_csv,
)
from .core.kernels import stencils_for
from .core.operators import curl, divergence
from .errors import MissingFrames
from .learn.losses import err_vel
from .material.neighbors import neighbor_pairs
from .material.stress import pair_geometry
from .mpm.particles import ParticleState, jacobians, read_snapshot
from .mpm.stepper import J_MAX, J_MIN

REPORT_SCHEMA_VERSION = 1
NORMALIZE_EPSILON = 1e-9
MASS_DRIFT_TOLERANCE = 1e-9

# How the stress scalar is composed, embedded verbatim in report metadata.
STRESS_COMPOSITION = (
    "sqrt(2)*|sum_p w_ip eps_p (1 - 1/J_p)|"
    " + sum_p w_ip sum_pairs(p) k_pair |log d|"
)

# Diverging blue-white-red stops as (position, (r, g, b)) with position in
# [0, 1]; interpolate linearly between stops. Kept deliberately simple so a
# client can reproduce the exact mapping without this module.
COLOR_STOPS = (
    (0.00, (0.020, 0.188, 0.380)),
    (0.25, (0.420, 0.682, 0.839)),
    (0.50, (0.969, 0.969, 0.969)),
    (0.75, (0.839, 0.376, 0.302)),
    (1.00, (0.404, 0.000, 0.122)),
)


def _normalized(field: VectorField) -> VectorField:
    vals = field.to_numpy()
    norm = np.linalg.norm(vals, axis=-1, keepdims=True)
    return VectorField(field.spec, vals / (norm + NORMALIZE_EPSILON))


def curl_map(field: VectorField, normalized: bool = False) -> ScalarField:
    """Vorticity per node; `normalized` unitizes vectors first (zero stays zero)."""
    return curl(_normalized(field) if normalized else field)


def divergence_map(field: VectorField, normalized: bool = False) -> ScalarField:
    """Expansion/contraction per node; `normalized` as in curl_map."""
    return divergence(_normalized(field) if normalized else field)


def stress_map(state: ParticleState, params, spec: GridSpec) -> ScalarField:
    """Per-node stress magnitude (see STRESS_COMPOSITION for the exact formula).

    `params` is anything exposing epsilon/k (scalars or per-particle arrays),
    or a parameter model, in which case it is evaluated on the state first.
    """
    state = state.to_numpy() if hasattr(state, "to_numpy") else state
    pairs = neighbor_pairs(state.x, state.r_b)
    if hasattr(params, "representation"):
        params = params.to_numpy().values(state, pairs)
    eps = np.broadcast_to(np.asarray(params.epsilon, dtype=np.float64), (state.n,))
    k = np.broadcast_to(np.asarray(params.k, dtype=np.float64), (state.n,))

    # Snapshots written before the engine rebuilt overgrown gradients can
    # carry a degenerate F; mirror the stepper's clamp so 1/J stays finite.
    J = np.clip(jacobians(state), J_MIN, J_MAX)
    bulk = eps * (1.0 - 1.0 / J)

    contact = np.zeros(state.n)
    if len(pairs):
        d, _, _ = pair_geometry(state, pairs)
        k_pair = 0.5 * (k[pairs[:, 0]] + k[pairs[:, 1]])
        mag = k_pair * np.abs(np.log(d))
        np.add.at(contact, pairs[:, 0], mag)
        np.add.at(contact, pairs[:, 1], mag)

    st = stencils_for(state.x, spec)
    out = np.zeros(spec.n_nodes)
    w = st.weights.reshape(state.n, 9)
    per_particle = math.sqrt(2.0) * np.abs(bulk) + contact
    np.add.at(out, st.flat_idx.reshape(state.n, 9), w * per_particle[:, None])
    return ScalarField(spec, out.reshape(spec.nx, spec.ny))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def colormap_rgb(t: float) -> tuple[float, float, float]:
    """Color at normalized position t in [0, 1] along the diverging ramp."""
    t = min(max(float(t), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(COLOR_STOPS, COLOR_STOPS[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return tuple(a + f * (b - a) for a, b in zip(c0, c1))
    return COLOR_STOPS[-1][1]


def write_map(field: ScalarField, out_dir, name: str) -> dict:
    """Write name.csv (contract) and name.png (presentation) under out_dir.

    Returns {"csv", "png", "vmax"}; the PNG maps [-vmax, vmax] symmetrically
    onto the diverging ramp with x as columns and y increasing upward.
    """
    from matplotlib.colors import LinearSegmentedColormap
    from matplotlib.image import imsave

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    png_path = os.path.join(out_dir, f"{name}.png")
    write_field_csv(field, csv_path)

    vals = field.to_numpy()
    vmax = float(np.abs(vals).max())
    scale = vmax if vmax > 0 else 1.0
    cmap = LinearSegmentedColormap.from_list(
        "crowd-diverging", [(t, c) for t, c in COLOR_STOPS]
    )
    imsave(png_path, vals.T, cmap=cmap, vmin=-scale, vmax=scale, origin="lower")
    return {"csv": csv_path, "png": png_path, "vmax": vmax}


# ---------------------------------------------------------------------------
# Run-directory report
# ---------------------------------------------------------------------------


def _numbered(dir_path, pattern: str) -> list[str]:
    if not os.path.isdir(dir_path):
        return []
    rx = re.compile(pattern)
    names = sorted(n for n in os.listdir(dir_path) if rx.fullmatch(n))
    return [os.path.join(dir_path, n) for n in names]


def _material_from_scenario(run_dir):
    path = os.path.join(run_dir, "scenario.json")
    if not os.path.exists(path):
        return 1.0, 1.0
    with open(path) as fh:
        doc = json.load(fh)
    mat = doc.get("material", {})
    return float(mat.get("epsilon", 1.0)), float(mat.get("k", 1.0))


class _Material:
    def __init__(self, epsilon, k):
        self.epsilon, self.k = epsilon, k


def report(run_dir, ground_truth: Optional[str] = None) -> dict:
    """Metrics document for a completed run directory.

    Expects frames/frame_NNNN.cmp1 particle snapshots and, optionally,
    fields/velocity_NNNN.cmf1 dumps. `ground_truth` names a directory of
    velocity_NNNN.cmf1 fields to score err_vel against.
    """
    frame_paths = _numbered(os.path.join(run_dir, "frames"), r"frame_\d+\.cmp1")
    if not frame_paths:
        raise MissingFrames(f"no frame snapshots under {run_dir}")
    field_paths = _numbered(os.path.join(run_dir, "fields"), r"velocity_\d+\.cmf1")

    eps, k = _material_from_scenario(run_dir)
    material = _Material(eps, k)

    masses, momenta, peak_stress = [], [], 0.0
    spec = None
    if field_paths:
        spec = read_field_binary(field_paths[0]).spec
    for path in frame_paths:
        state = read_snapshot(path)
        masses.append(float(state.m.sum()))
        momenta.append([float(v) for v in (state.m[:, None] * state.v).sum(0)])
        if spec is not None and state.n:
            peak_stress = max(
                peak_stress, float(stress_map(state, material, spec).to_numpy().max())
            )

    peak_curl, div_min, div_max = 0.0, 0.0, 0.0
    for path in field_paths:
        f = read_field_binary(path)
        peak_curl = max(peak_curl, float(np.abs(curl_map(f).to_numpy()).max()))
        d = divergence_map(f).to_numpy()
        div_min = min(div_min, float(d.min()))
        div_max = max(div_max, float(d.max()))

    m0 = masses[0]
    drift = max(abs(m - m0) for m in masses) / m0 if m0 else 0.0

    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n_frames": len(frame_paths),
        "mass": masses,
        "momentum": momenta,
        "mass_drift_rel": drift,
        "conservation_violation": bool(drift > MASS_DRIFT_TOLERANCE),
        "peak_stress": peak_stress,
        "peak_curl": peak_curl,
        "divergence_min": div_min,
        "divergence_max": div_max,
        "stress_composition": STRESS_COMPOSITION,
    }

    if ground_truth is not None:
        gt_paths = _numbered(ground_truth, r"velocity_\d+\.cmf1")
        n = min(len(gt_paths), len(field_paths))
        if n == 0:
            raise MissingFrames(f"no velocity fields to score under {ground_truth}")
        pred = [read_field_binary(p) for p in field_paths[:n]]
        gt = [read_field_binary(p) for p in gt_paths[:n]]
        doc["err_vel"] = err_vel(pred, gt)
    return doc
