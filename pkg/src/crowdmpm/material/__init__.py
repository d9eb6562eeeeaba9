from .neighbors import brute_force_pairs, neighbor_pairs
from .stress import (
    D_FLOOR,
    MaterialParams,
    bulk_matrix,
    overlap_count,
    pair_geometry,
    pair_repulsion,
    particle_pair_sums,
    stress_force,
)

__all__ = [
    "brute_force_pairs",
    "neighbor_pairs",
    "D_FLOOR",
    "MaterialParams",
    "bulk_matrix",
    "overlap_count",
    "pair_geometry",
    "pair_repulsion",
    "particle_pair_sums",
    "stress_force",
]
