"""Boundary interaction energy and the convexity of planar and spatial domains."""

import os

# numba probes TBB at the first parallel launch and warns when it is too old
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .energy import EnergyReport, c_constant, defect, kernel, total_energy  # noqa: E402
from .geometry import (  # noqa: E402
    DiscreteBoundary,
    PolygonBoundary,
    TriangleMeshBoundary,
    discretize,
    is_convex_oracle,
    make_polygon,
    make_shape,
    make_sphere_mesh,
    refine,
)

__all__ = [
    "DiscreteBoundary",
    "EnergyReport",
    "PolygonBoundary",
    "TriangleMeshBoundary",
    "c_constant",
    "defect",
    "discretize",
    "is_convex_oracle",
    "kernel",
    "make_polygon",
    "make_shape",
    "make_sphere_mesh",
    "refine",
    "total_energy",
]
