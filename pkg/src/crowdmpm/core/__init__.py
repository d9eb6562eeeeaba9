from .grids import (
    GHOST_CELLS,
    MASS_EPSILON,
    Grid,
    GridSpec,
    ScalarField,
    VectorField,
    read_field_binary,
    read_field_csv,
    write_field_binary,
    write_field_csv,
)
from .kernels import (
    Stencils,
    bspline_quadratic,
    bspline_quadratic_deriv,
    sample_field,
    stencil_for,
    stencils_for,
)
from .operators import (
    advective_squared,
    curl,
    directional_derivative,
    divergence,
    grad_div,
    laplacian,
)

__all__ = [
    "GHOST_CELLS",
    "MASS_EPSILON",
    "Grid",
    "GridSpec",
    "ScalarField",
    "VectorField",
    "Stencils",
    "bspline_quadratic",
    "bspline_quadratic_deriv",
    "sample_field",
    "stencil_for",
    "stencils_for",
    "advective_squared",
    "curl",
    "directional_derivative",
    "divergence",
    "grad_div",
    "laplacian",
    "read_field_binary",
    "read_field_csv",
    "write_field_binary",
    "write_field_csv",
]
