"""Surfaces: parametric charts, triangle meshes, and damping fields."""

from .charts import (
    AnalyticSurface,
    Chart,
    DEFAULT_QUAD_ORDER,
    MIN_QUAD_ORDER,
    polar_bump,
    smooth_step,
)
from .damping import ABOVE_ONE, BELOW_ONE, DampingField
from .mesh import (
    SurfaceMesh,
    icosphere,
    read_off,
    read_vertex_values,
    write_off,
)

__all__ = [
    "ABOVE_ONE",
    "AnalyticSurface",
    "BELOW_ONE",
    "Chart",
    "DEFAULT_QUAD_ORDER",
    "DampingField",
    "MIN_QUAD_ORDER",
    "SurfaceMesh",
    "icosphere",
    "polar_bump",
    "read_off",
    "read_vertex_values",
    "smooth_step",
    "write_off",
]
