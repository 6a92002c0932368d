"""Spatial SIR epidemics on the 2-d lattice with village structure.

Simulation of the exact stochastic process, its deterministic large-village
limit, the constants and curves that describe survival, spreading speed and
the infection profile near the frontier, plus brute-force oracles (path
counting, percolation representation) that cross-validate everything.
"""

__version__ = "0.1.0"

from .params import InitialCondition, ModelParams
from .solvers import (
    LayerTable,
    axis_boundary_levels,
    axis_fixed_point,
    cone_aperture,
    frontier_level,
    layer_levels,
    survival_probability,
)

__all__ = [
    "InitialCondition",
    "ModelParams",
    "LayerTable",
    "axis_boundary_levels",
    "axis_fixed_point",
    "cone_aperture",
    "frontier_level",
    "layer_levels",
    "survival_probability",
    "__version__",
]
