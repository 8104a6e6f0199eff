"""Discrete boundaries of bounded domains in the plane and in space.

Polygons are closed, simple and counterclockwise; triangle meshes are closed,
watertight and outward oriented.  Both are immutable and validated at
construction.  :func:`discretize` turns either into a :class:`DiscreteBoundary`
of flat elements (one per edge or triangle), which is what the energy and
Crofton code consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import shapely
from scipy.spatial import ConvexHull

from .errors import (
    BadParams,
    DegenerateEdge,
    NotWatertight,
    SelfIntersecting,
    TooFewVertices,
)

Projection = Callable[[np.ndarray], np.ndarray]

CONVEXITY_TOL = 1e-9
DEGENERATE_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _diameter(points: np.ndarray) -> float:
    # bounding-box diagonal; within sqrt(dim) of the true diameter, which is
    # all the scale-relative tolerances need
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def project_to_circle(radius: float = 1.0, center=(0.0, 0.0)) -> Projection:
    c = np.asarray(center, dtype=float)

    def project(points: np.ndarray) -> np.ndarray:
        d = points - c
        return c + radius * d / np.linalg.norm(d, axis=1)[:, None]

    return project


def project_to_sphere(radius: float = 1.0) -> Projection:
    def project(points: np.ndarray) -> np.ndarray:
        return radius * points / np.linalg.norm(points, axis=1)[:, None]

    return project


@dataclass(frozen=True)
class BoundaryElement:
    centroid: np.ndarray
    normal: np.ndarray
    measure: float


@dataclass(frozen=True, eq=False)
class PolygonBoundary:
    """Closed simple polygon, counterclockwise (outward normal = tangent turned -90 degrees)."""

    vertices: np.ndarray
    projection: Optional[Projection] = field(default=None, repr=False)

    dimension = 2

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def perimeter(self) -> float:
        return math.fsum(self.edge_lengths)

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        return _diameter(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class TriangleMeshBoundary:
    """Closed watertight triangle mesh, triangles counterclockwise seen from outside."""

    vertices: np.ndarray
    triangles: np.ndarray
    projection: Optional[Projection] = field(default=None, repr=False)

    dimension = 3

    @property
    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(_triangle_cross(self.vertices, self.triangles), axis=1)

    @property
    def area(self) -> float:
        return math.fsum(self.triangle_areas)

    @property
    def volume(self) -> float:
        return mesh_volume(self.vertices, self.triangles)

    @property
    def diameter(self) -> float:
        return _diameter(self.vertices)

    def __len__(self) -> int:
        return len(self.triangles)


Shape = Union[PolygonBoundary, TriangleMeshBoundary]


@dataclass(frozen=True, eq=False)
class DiscreteBoundary:
    """Flat boundary elements: centroids (M, n), unit outward normals (M, n), measures (M,)."""

    dimension: int
    centroids: np.ndarray
    normals: np.ndarray
    measures: np.ndarray
    source: Optional[Shape] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("centroids", "normals", "measures"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def total_measure(self) -> float:
        return math.fsum(self.measures)

    @property
    def elements(self) -> list[BoundaryElement]:
        return [
            BoundaryElement(c, nrm, float(m))
            for c, nrm, m in zip(self.centroids, self.normals, self.measures)
        ]

    @property
    def max_element_diameter(self) -> float:
        src = self.source
        if isinstance(src, PolygonBoundary):
            return float(src.edge_lengths.max())
        if isinstance(src, TriangleMeshBoundary):
            tri = src.vertices[src.triangles]
            d = [np.linalg.norm(tri[:, i] - tri[:, (i + 1) % 3], axis=1) for i in range(3)]
            return float(np.max(d))
        return float(np.sqrt(self.measures.max()))

    def __len__(self) -> int:
        return len(self.measures)


def signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * math.fsum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _triangle_cross(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = (vertices[triangles[:, i]] for i in range(3))
    return np.cross(b - a, c - a)


def mesh_volume(vertices: np.ndarray, triangles: np.ndarray) -> float:
    a, b, c = (vertices[triangles[:, i]] for i in range(3))
    return math.fsum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0


# ---------------------------------------------------------------------------
# construction


def make_polygon(vertices: Sequence, projection: Optional[Projection] = None) -> PolygonBoundary:
    """Validate a closed polygon; clockwise input is reversed to counterclockwise.

    Raises TooFewVertices, DegenerateEdge or SelfIntersecting.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise BadParams(f"expected an (N, 2) array of vertices, got shape {v.shape}")
    if len(v) < 3:
        raise TooFewVertices(f"a polygon needs at least 3 vertices, got {len(v)}")
    if not np.all(np.isfinite(v)):
        raise BadParams("vertices must be finite")
    diam = _diameter(v)
    e = np.roll(v, -1, axis=0) - v
    short = np.flatnonzero(np.hypot(e[:, 0], e[:, 1]) <= DEGENERATE_TOL * diam)
    if diam == 0.0 or len(short):
        k = int(short[0]) if len(short) else 0
        raise DegenerateEdge(f"edge {k} has (near) zero length")
    if not shapely.LinearRing(v).is_simple:
        raise SelfIntersecting("polygon boundary intersects itself")
    area = signed_area(v)
    if area == 0.0:
        raise SelfIntersecting("polygon encloses zero area")
    if area < 0:
        v = np.roll(v[::-1], 1, axis=0)
    return PolygonBoundary(_frozen(v), projection)


def make_mesh(
    vertices: Sequence, triangles: Sequence, projection: Optional[Projection] = None
) -> TriangleMeshBoundary:
    """Validate a closed triangle mesh; an inward-oriented mesh is flipped outward.

    Raises NotWatertight or DegenerateEdge.
    """
    v = np.asarray(vertices, dtype=float)
    t = np.asarray(triangles, dtype=np.int64)
    if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3:
        raise BadParams("expected (V, 3) vertices and (T, 3) triangles")
    if len(t) < 4:
        raise TooFewVertices(f"a closed mesh needs at least 4 triangles, got {len(t)}")
    if t.min() < 0 or t.max() >= len(v):
        raise BadParams("triangle index out of range")
    if not np.all(np.isfinite(v)):
        raise BadParams("vertices must be finite")
    check_watertight(t, len(v))
    diam = _diameter(v)
    dbl_area = np.linalg.norm(_triangle_cross(v, t), axis=1)
    bad = np.flatnonzero(dbl_area <= DEGENERATE_TOL * diam * diam)
    if len(bad):
        raise DegenerateEdge(f"triangle {int(bad[0])} has (near) zero area")
    vol = mesh_volume(v, t)
    if vol == 0.0:
        raise NotWatertight("mesh encloses zero volume")
    if vol < 0:
        t = t[:, ::-1]
    return TriangleMeshBoundary(_frozen(v), _frozen(t, np.int64), projection)


def check_watertight(triangles: np.ndarray, n_vertices: int) -> None:
    """Every directed edge must occur once and its reverse exactly once."""
    a = triangles.ravel()
    b = np.roll(triangles, -1, axis=1).ravel()
    if np.any(a == b):
        raise DegenerateEdge("triangle with a repeated vertex")
    fwd = a * n_vertices + b
    rev = b * n_vertices + a
    uniq, counts = np.unique(fwd, return_counts=True)
    if np.any(counts > 1):
        raise NotWatertight("an edge is used twice with the same orientation")
    if not np.array_equal(uniq, np.unique(rev)):
        raise NotWatertight("mesh has boundary edges or inconsistent orientation")


def _closed_polyline(corners: np.ndarray, resolution: int) -> np.ndarray:
    """Distribute `resolution` vertices along a closed polyline, keeping every corner."""
    k = len(corners)
    if resolution < k:
        raise BadParams(f"resolution {resolution} is below the {k} corners of this shape")
    e = np.roll(corners, -1, axis=0) - corners
    length = np.hypot(e[:, 0], e[:, 1])
    share = (resolution - k) * length / length.sum()
    extra = np.floor(share).astype(int)
    # largest remainder, ties to the lower edge index
    order = np.argsort(-(share - extra), kind="stable")
    extra[order[: resolution - k - extra.sum()]] += 1
    pts = []
    for i in range(k):
        s = np.arange(extra[i] + 1) / (extra[i] + 1)
        pts.append(corners[i] + s[:, None] * e[i])
    return np.concatenate(pts)


def star_corners(outer_radius=1.0, inner_radius=0.4, points=5) -> np.ndarray:
    # first tip points along +y
    ang = np.pi / 2 + np.pi * np.arange(2 * points) / points
    rad = np.where(np.arange(2 * points) % 2 == 0, outer_radius, inner_radius)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


SHAPE_KINDS = ("circle", "ellipse", "star", "kidney", "square")


def make_shape(kind: str, resolution: int, **params) -> PolygonBoundary:
    """Polygon inscribed in one of the built-in curves.

    circle:  radius=1
    ellipse: a=2, b=1
    square:  side=1 (centered at the origin, corners kept)
    star:    outer_radius=1, inner_radius=0.4, points=5 (first tip on +y,
             vertices spread over the star's edges by length, corners kept)
    kidney:  dimpled limacon r(t) = base + lobe*cos(t), base=1, lobe=0.9;
             C1 and simple for base/2 < lobe < base, nonconvex once lobe > base/2
    """
    resolution = int(resolution)
    if resolution < 3:
        raise BadParams(f"resolution must be >= 3, got {resolution}")
    known = {
        "circle": {"radius"},
        "ellipse": {"a", "b"},
        "square": {"side"},
        "star": {"outer_radius", "inner_radius", "points"},
        "kidney": {"base", "lobe"},
    }
    if kind not in known:
        raise BadParams(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    unknown = set(params) - known[kind]
    if unknown:
        raise BadParams(f"unexpected parameters for {kind}: {sorted(unknown)}")

    t = 2 * np.pi * np.arange(resolution) / resolution
    projection = None
    if kind == "circle":
        r = float(params.get("radius", 1.0))
        if r <= 0:
            raise BadParams("radius must be positive")
        v = np.column_stack([r * np.cos(t), r * np.sin(t)])
        projection = project_to_circle(r)
    elif kind == "ellipse":
        a, b = float(params.get("a", 2.0)), float(params.get("b", 1.0))
        if a <= 0 or b <= 0:
            raise BadParams("ellipse semi-axes must be positive")
        v = np.column_stack([a * np.cos(t), b * np.sin(t)])
    elif kind == "square":
        s = float(params.get("side", 1.0))
        if s <= 0:
            raise BadParams("side must be positive")
        h = s / 2
        v = _closed_polyline(np.array([[-h, -h], [h, -h], [h, h], [-h, h]]), resolution)
    elif kind == "star":
        ro = float(params.get("outer_radius", 1.0))
        ri = float(params.get("inner_radius", 0.4))
        p = int(params.get("points", 5))
        if not (0 < ri < ro) or p < 2:
            raise BadParams("star needs 0 < inner_radius < outer_radius and points >= 2")
        v = _closed_polyline(star_corners(ro, ri, p), resolution)
    else:
        base, lobe = float(params.get("base", 1.0)), float(params.get("lobe", 0.9))
        if not (0 < lobe < base):
            raise BadParams("kidney needs 0 < lobe < base (lobe >= base self-intersects)")
        r = base + lobe * np.cos(t)
        v = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return make_polygon(v, projection)


def convex_hull(shape: PolygonBoundary, resolution: Optional[int] = None) -> PolygonBoundary:
    """Convex hull polygon of `shape`, optionally resampled to `resolution` vertices."""
    hull = ConvexHull(np.asarray(shape.vertices))
    corners = hull.points[hull.vertices]  # counterclockwise in 2D
    if resolution is None:
        return make_polygon(corners)
    return make_polygon(_closed_polyline(corners, int(resolution)))


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    p = (1 + math.sqrt(5)) / 2
    v = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=float,
    )
    t = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return v / np.linalg.norm(v, axis=1)[:, None], t


def _subdivide(vertices: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One 4-way midpoint split; shared edges get one shared midpoint."""
    nv = len(vertices)
    edges = np.stack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1
    )
    key = np.sort(edges, axis=2)
    uniq, inv = np.unique(key.reshape(-1, 2), axis=0, return_inverse=True)
    inv = inv.reshape(-1, 3) + nv
    mids = 0.5 * (vertices[uniq[:, 0]] + vertices[uniq[:, 1]])
    a, b, c = triangles.T
    ab, bc, ca = inv.T
    new_t = np.concatenate(
        [
            np.column_stack([a, ab, ca]),
            np.column_stack([b, bc, ab]),
            np.column_stack([c, ca, bc]),
            np.column_stack([ab, bc, ca]),
        ]
    )
    return np.concatenate([vertices, mids]), new_t


def make_sphere_mesh(subdivisions: int, radius: float = 1.0) -> TriangleMeshBoundary:
    """Icosahedron subdivided `subdivisions` times, vertices pushed to the sphere."""
    if not 0 <= subdivisions <= 7:
        raise BadParams(f"subdivisions must be in [0, 7], got {subdivisions}")
    if radius <= 0:
        raise BadParams("radius must be positive")
    v, t = _icosahedron()
    for _ in range(subdivisions):
        v, t = _subdivide(v, t)
        v = v / np.linalg.norm(v, axis=1)[:, None]
    return make_mesh(radius * v, t, project_to_sphere(radius))


# ---------------------------------------------------------------------------
# discretization and refinement


def discretize(shape: Shape) -> DiscreteBoundary:
    """One flat element per polygon edge / mesh triangle."""
    if isinstance(shape, PolygonBoundary):
        v = shape.vertices
        e = shape.edges
        m = np.hypot(e[:, 0], e[:, 1])
        normals = np.column_stack([e[:, 1], -e[:, 0]]) / m[:, None]
        centroids = v + 0.5 * e
        return DiscreteBoundary(2, centroids, normals, m, shape)
    if isinstance(shape, TriangleMeshBoundary):
        v, t = shape.vertices, shape.triangles
        cr = _triangle_cross(v, t)
        dbl = np.linalg.norm(cr, axis=1)
        centroids = (v[t[:, 0]] + v[t[:, 1]] + v[t[:, 2]]) / 3.0
        return DiscreteBoundary(3, centroids, cr / dbl[:, None], 0.5 * dbl, shape)
    raise TypeError(f"cannot discretize {type(shape).__name__}")


def refine(shape: Shape, factor: int, project: bool = False) -> Shape:
    """Split every edge into `factor` pieces (polygon) or 4-way split log2(factor) times (mesh).

    With ``project=True`` the new vertices are mapped through the shape's
    projection hook (circle and sphere shapes carry one); otherwise the
    refinement is flat and preserves the total measure.
    """
    factor = int(factor)
    if factor < 2:
        raise BadParams(f"refinement factor must be >= 2, got {factor}")
    if project and shape.projection is None:
        raise BadParams("shape has no projection hook")
    if isinstance(shape, PolygonBoundary):
        s = np.arange(factor) / factor
        v = (shape.vertices[:, None, :] + s[None, :, None] * shape.edges[:, None, :]).reshape(-1, 2)
        if project:
            v = shape.projection(v)
        return make_polygon(v, shape.projection)
    if factor & (factor - 1):
        raise BadParams(f"mesh refinement factor must be a power of two, got {factor}")
    v, t = np.asarray(shape.vertices), np.asarray(shape.triangles)
    for _ in range(factor.bit_length() - 1):
        v, t = _subdivide(v, t)
        if project:
            v = shape.projection(v)
    return make_mesh(v, t, shape.projection)


# ---------------------------------------------------------------------------
# convexity oracle


def is_convex_oracle(shape: Shape) -> bool:
    """Independent convexity check with scale-relative tolerance."""
    if isinstance(shape, PolygonBoundary):
        # sine of the turning angle at each vertex; normalizing by the two edge
        # lengths keeps the test scale invariant and independent of resolution
        e = shape.edges
        en = np.roll(e, -1, axis=0)
        cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
        lengths = shape.edge_lengths
        return bool(np.all(cross >= -CONVEXITY_TOL * lengths * np.roll(lengths, -1)))
    # every face plane must support the body; checking the hull vertices suffices
    v = np.asarray(shape.vertices)
    hull_pts = v[ConvexHull(v).vertices]
    cr = _triangle_cross(v, shape.triangles)
    nrm = cr / np.linalg.norm(cr, axis=1)[:, None]
    a = v[shape.triangles[:, 0]]
    tol = CONVEXITY_TOL * shape.diameter
    for lo in range(0, len(nrm), 4096):
        n_blk, a_blk = nrm[lo : lo + 4096], a[lo : lo + 4096]
        height = n_blk @ hull_pts.T - np.einsum("ij,ij->i", n_blk, a_blk)[:, None]
        if np.any(height > tol):
            return False
    return True


# ---------------------------------------------------------------------------
# point location


def winding_number(shape: Shape, x: Sequence[float]) -> float:
    """Winding number of the boundary around x (1 inside, 0 outside)."""
    x = np.asarray(x, dtype=float)
    if isinstance(shape, PolygonBoundary):
        a = shape.vertices - x
        b = np.roll(a, -1, axis=0)
        ang = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ij,ij->i", a, b))
        return math.fsum(ang) / (2 * np.pi)
    v = shape.vertices - x
    a, b, c = (v[shape.triangles[:, i]] for i in range(3))
    la, lb, lc = (np.linalg.norm(p, axis=1) for p in (a, b, c))
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (
        la * lb * lc
        + np.einsum("ij,ij->i", a, b) * lc
        + np.einsum("ij,ij->i", b, c) * la
        + np.einsum("ij,ij->i", c, a) * lb
    )
    return math.fsum(2 * np.arctan2(num, den)) / (4 * np.pi)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    s = np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab)
    s = np.clip(s, 0.0, 1.0)
    return np.linalg.norm(p - (a + s[:, None] * ab), axis=1)


def distance_to_boundary(shape: Shape, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if isinstance(shape, PolygonBoundary):
        v = shape.vertices
        p = np.broadcast_to(x, v.shape)
        return float(_segment_distance(p, v, np.roll(v, -1, axis=0)).min())
    v, t = shape.vertices, shape.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    p = np.broadcast_to(x, a.shape)
    cr = np.cross(b - a, c - a)
    nrm = cr / np.linalg.norm(cr, axis=1)[:, None]
    h = np.einsum("ij,ij->i", p - a, nrm)
    q = p - h[:, None] * nrm
    inside = (
        (np.einsum("ij,ij->i", np.cross(b - a, q - a), nrm) >= 0)
        & (np.einsum("ij,ij->i", np.cross(c - b, q - b), nrm) >= 0)
        & (np.einsum("ij,ij->i", np.cross(a - c, q - c), nrm) >= 0)
    )
    edge = np.minimum.reduce(
        [_segment_distance(p, a, b), _segment_distance(p, b, c), _segment_distance(p, c, a)]
    )
    return float(np.where(inside, np.abs(h), edge).min())
