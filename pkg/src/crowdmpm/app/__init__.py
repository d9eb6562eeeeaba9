from .geometry import SdfBoundary, circle_sdf, rect_sdf
from .scenario import Scenario, build_boundary, build_state, grid_spec_for, load_scenario
from .runner import RunResult, run

__all__ = [
    "RunResult",
    "Scenario",
    "SdfBoundary",
    "build_boundary",
    "build_state",
    "circle_sdf",
    "grid_spec_for",
    "load_scenario",
    "rect_sdf",
    "run",
]
