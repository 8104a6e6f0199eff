"""Monte Carlo line sampling under the kinematic measure.

A :class:`LineSampler` draws unoriented lines meeting a ball B(center, R):
direction uniform on the sphere (canonicalized so the first nonzero
component is positive), offset uniform on the (n-1)-ball of radius R in the
hyperplane through ``center`` orthogonal to the direction.  The total measure
given to this line set is

    sampled_measure = |S^(n-1)| / 2 * |B^(n-1)_R|    (2 pi R in 2D, 2 pi^2 R^2 in 3D)

which makes the probability of a draw equal to the kinematic measure divided
by ``sampled_measure``.  Draw ``i`` is a pure function of ``(seed, i)``:
it consumes the Philox4x64 block with counter ``i`` under key ``(seed, stream)``.

The Crofton constant alpha is the factor in ``|S| = alpha * int n_l(S) dmu``;
under the normalization above only ``alpha * sampled_measure`` is observable
and :func:`calibrate_alpha` measures alpha on a sphere of known area.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np
from scipy import stats

from . import _kernels, energy, geometry
from .errors import BadParams, BallTooSmall, IndexOutOfRange, TooFewHits
from .geometry import DiscreteBoundary, PolygonBoundary, Shape, TriangleMeshBoundary

ESTIMATE_STREAM = 0
CALIBRATION_STREAM = 1
BLOCK = 1 << 16

FIVE_SIGMA = float(stats.norm.sf(5.0))
ARTIFACT_RATE = 1e-4
SIGNIFICANCE = 1e-3

Target = Union[Shape, DiscreteBoundary]


def _shape_of(target: Target) -> Shape:
    if isinstance(target, DiscreteBoundary):
        if target.source is None:
            raise BadParams("line counting needs the boundary's source polygon or mesh")
        return target.source
    return target


def _canonical(directions: np.ndarray) -> np.ndarray:
    """Flip each row so its first nonzero component is positive."""
    nz = directions != 0
    first = np.argmax(nz, axis=1)
    lead = directions[np.arange(len(directions)), first]
    return directions * np.where(lead < 0, -1.0, 1.0)[:, None]


@dataclass(frozen=True)
class Line:
    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        p = np.array(self.point, dtype=float)
        d = np.array(self.direction, dtype=float)
        norm = np.linalg.norm(d)
        if p.shape != d.shape or norm == 0:
            raise BadParams("line needs a point and a nonzero direction of equal dimension")
        if abs(norm - 1.0) > 1e-12:
            d = d / norm
        d = _canonical(d[None, :])[0]
        p.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class LineSampler:
    center: tuple
    radius: float
    seed: int = 0
    dimension: int = 2

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        if len(c) != self.dimension or self.dimension not in (2, 3):
            raise BadParams(f"sampler center must have dimension 2 or 3, got {len(c)}")
        if not self.radius > 0:
            raise BadParams("sampler radius must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise BadParams("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def for_target(cls, target: Target, seed: int = 0, margin: float = 1.1, radius=None):
        """Sampler centered at the vertex mean with R = margin * circumradius."""
        shape = _shape_of(target)
        v = np.asarray(shape.vertices)
        center = v.mean(axis=0)
        if radius is None:
            radius = margin * float(np.linalg.norm(v - center, axis=1).max())
        return cls(tuple(center), radius, seed, shape.dimension)

    @property
    def sampled_measure(self) -> float:
        if self.dimension == 2:
            return math.pi * 2.0 * self.radius
        return 2.0 * math.pi * math.pi * self.radius**2

    def draw(self, start: int, count: int, stream: int = ESTIMATE_STREAM):
        """Points (count, n) and canonical unit directions for draws start .. start+count-1."""
        bitgen = np.random.Philox(key=[self.seed, stream], counter=int(start))
        raw = bitgen.random_raw(4 * int(count)).reshape(-1, 4)
        u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
        c = np.asarray(self.center)
        if self.dimension == 2:
            phi = np.pi * (u[:, 0] - 0.5)
            d = np.column_stack([np.cos(phi), np.sin(phi)])
            t = self.radius * (2.0 * u[:, 1] - 1.0)
            p = c + t[:, None] * np.column_stack([-d[:, 1], d[:, 0]])
            return p, _canonical(d)
        z = 2.0 * u[:, 0] - 1.0
        az = 2.0 * np.pi * u[:, 1]
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        d = _canonical(np.column_stack([s * np.cos(az), s * np.sin(az), z]))
        axis = np.argmin(np.abs(d), axis=1)
        a = np.zeros_like(d)
        a[np.arange(len(d)), axis] = 1.0
        e1 = a - np.einsum("ij,ij->i", a, d)[:, None] * d
        e1 /= np.linalg.norm(e1, axis=1)[:, None]
        e2 = np.cross(d, e1)
        rho = self.radius * np.sqrt(u[:, 2])
        psi = 2.0 * np.pi * u[:, 3]
        p = c + (rho * np.cos(psi))[:, None] * e1 + (rho * np.sin(psi))[:, None] * e2
        return p, d

    def check_encloses(self, target: Target) -> None:
        """Every element must lie in the ball; flat elements do iff all their vertices do."""
        shape = _shape_of(target)
        if shape.dimension != self.dimension:
            raise BadParams(f"sampler is {self.dimension}D but the boundary is {shape.dimension}D")
        reach = float(np.linalg.norm(np.asarray(shape.vertices) - np.asarray(self.center), axis=1).max())
        if reach > self.radius:
            raise BallTooSmall(f"boundary reaches {reach:.6g} from the center, radius is {self.radius:.6g}")


def sample_line(sampler: LineSampler, draw_index: int) -> Line:
    p, d = sampler.draw(draw_index, 1)
    return Line(p[0], d[0])


# ---------------------------------------------------------------------------
# intersection counting


@dataclass(frozen=True, eq=False)
class _BVH:
    vertices: np.ndarray
    triangles: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    prim: np.ndarray

    def count_lines(self, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
        return _kernels.count_lines(
            np.ascontiguousarray(points), np.ascontiguousarray(directions),
            self.vertices, self.triangles, self.lo, self.hi,
            self.left, self.right, self.start, self.count, self.prim,
        )


def _primitive_boxes(shape: Shape):
    v = np.array(shape.vertices, dtype=float)
    if isinstance(shape, PolygonBoundary):
        corners = np.stack([v, np.roll(v, -1, axis=0)], axis=1)
        tris = np.zeros((1, 3), dtype=np.int64)
    else:
        tris = np.array(shape.triangles, dtype=np.int64)
        corners = v[tris]
    # padding keeps the box cull conservative against rounding in the slab test
    pad = 1e-9 * max(shape.diameter, 1e-300)
    return v, tris, corners.min(axis=1) - pad, corners.max(axis=1) + pad


@functools.lru_cache(maxsize=16)
def _bvh_cached(shape: Shape) -> _BVH:
    return build_bvh(shape)


def build_bvh(shape: Shape, leaf_size: int = 4) -> _BVH:
    """Median-split bounding volume hierarchy over edges / triangles."""
    v, tris, plo, phi = _primitive_boxes(shape)
    centers = 0.5 * (plo + phi)
    prim = np.arange(len(plo), dtype=np.int64)
    lo, hi, left, right, start, count = [], [], [], [], [], []

    def new_node(a, b):
        idx = prim[a:b]
        lo.append(plo[idx].min(axis=0))
        hi.append(phi[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(a)
        count.append(b - a)
        return len(lo) - 1

    stack = [(new_node(0, len(prim)), 0, len(prim))]
    while stack:
        node, a, b = stack.pop()
        if b - a <= leaf_size:
            continue
        c = centers[prim[a:b]]
        axis = int(np.argmax(np.ptp(c, axis=0)))
        mid = (b - a) // 2
        order = np.argsort(c[:, axis], kind="stable")
        prim[a:b] = prim[a:b][order]
        m = a + mid
        count[node] = 0
        left[node] = new_node(a, m)
        right[node] = new_node(m, b)
        stack.append((left[node], a, m))
        stack.append((right[node], m, b))
    as_i = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return _BVH(v, tris, np.asarray(lo), np.asarray(hi), as_i(left), as_i(right),
                as_i(start), as_i(count), prim)


def count_intersections(line: Line, boundary: Target) -> int:
    """Number of edges / triangles crossed by the line.

    Vertex sides are evaluated once per (line, vertex) or (line, edge) with
    half-open ownership, so a line through a shared vertex or edge is counted
    exactly once and crossing parity is exact on closed boundaries.
    """
    shape = _shape_of(boundary)
    if len(line.point) != shape.dimension:
        raise BadParams("line and boundary dimensions differ")
    bvh = _bvh_cached(shape)
    return int(bvh.count_lines(line.point[None, :], line.direction[None, :])[0])


def _count_histogram(sampler: LineSampler, shape: Shape, samples: int, stream: int) -> np.ndarray:
    bvh = _bvh_cached(shape)
    hist = np.zeros(1, dtype=np.int64)
    for start in range(0, samples, BLOCK):
        p, d = sampler.draw(start, min(BLOCK, samples - start), stream)
        h = np.bincount(bvh.count_lines(p, d))
        if len(h) > len(hist):
            hist = np.concatenate([hist, np.zeros(len(h) - len(hist), dtype=np.int64)])
        hist[: len(h)] += h
    return hist


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class AlphaCalibration:
    alpha: float
    std_error: float
    samples: int
    reference_measure: float


@dataclass(frozen=True)
class CroftonEstimate:
    samples: int
    mean_n: float
    mean_n2: float
    mean_n_n_minus_1: float
    histogram: tuple
    alpha_calibration: float
    alpha_std_error: float
    sampled_measure: float
    area_estimate: float
    area_std_error: float
    std_errors: dict = field(default_factory=dict)

    @property
    def odd_fraction(self) -> float:
        return sum(self.histogram[1::2]) / self.samples

    def mass_on(self, counts) -> float:
        return sum(self.histogram[k] for k in counts if k < len(self.histogram)) / self.samples

    def mass_at_least(self, k: int) -> float:
        return sum(self.histogram[k:]) / self.samples

    def as_dict(self) -> dict:
        out = asdict(self)
        out["histogram"] = list(self.histogram)
        return out


def _moments(hist: np.ndarray):
    s = int(hist.sum())
    k = np.arange(len(hist), dtype=float)
    out = {}
    moments = (
        ("mean_n", k),
        ("mean_n2", k * k),
        ("mean_n_n_minus_1", k * (k - 1)),
        # n^2 - 2n is zero on lines crossing a convex boundary 0 or 2 times
        ("mean_n2_minus_2n", k * (k - 2)),
    )
    for name, f in moments:
        mean = math.fsum(f * hist) / s
        second = math.fsum(f * f * hist) / s
        var = max(second - mean * mean, 0.0) * s / max(s - 1, 1)
        out[name] = (mean, math.sqrt(var / s))
    return out


def _calibration_shape(dimension: int, radius: float, center: tuple) -> Shape:
    # unit circle (N=4096) or icosphere (5 subdivisions) shrunk to fit the ball
    r = radius / 1.1
    if dimension == 2:
        base = geometry.make_shape("circle", 4096)
    else:
        base = geometry.make_sphere_mesh(5)
    c = np.asarray(center)
    if dimension == 2:
        return geometry.make_polygon(c + r * np.asarray(base.vertices))
    return geometry.make_mesh(c + r * np.asarray(base.vertices), base.triangles)


@functools.lru_cache(maxsize=32)
def _calibrate(dimension: int, radius: float, center: tuple, seed: int, samples: int) -> AlphaCalibration:
    sampler = LineSampler(center, radius, seed, dimension)
    shape = _calibration_shape(dimension, radius, center)
    known = shape.perimeter if dimension == 2 else shape.area
    mean, se = _moments(_count_histogram(sampler, shape, samples, CALIBRATION_STREAM))["mean_n"]
    alpha = known / (mean * sampler.sampled_measure)
    return AlphaCalibration(alpha, alpha * se / mean, samples, known)


def calibrate_alpha(sampler: LineSampler, samples: int = 1_000_000) -> AlphaCalibration:
    """Solve alpha from a sphere of known measure inscribed in the sampler's ball.

    Uses an independent random stream of the same seed; cached per
    (dimension, radius, center, seed, samples).
    """
    if samples < 1000:
        raise BadParams("calibration needs at least 1000 lines")
    return _calibrate(sampler.dimension, sampler.radius, sampler.center, sampler.seed, int(samples))


def estimate(
    sampler: LineSampler,
    boundary: Target,
    samples: int,
    calibration: AlphaCalibration | None = None,
) -> CroftonEstimate:
    """Intersection-count moments and the Crofton measure estimate alpha * E[n] * measure."""
    if samples < 1000:
        raise BadParams(f"estimate needs at least 1000 lines, got {samples}")
    shape = _shape_of(boundary)
    sampler.check_encloses(boundary)
    if calibration is None:
        calibration = calibrate_alpha(sampler, samples)
    hist = _count_histogram(sampler, shape, int(samples), ESTIMATE_STREAM)
    mom = _moments(hist)
    mean_n, se_n = mom["mean_n"]
    alpha = calibration.alpha
    area = alpha * mean_n * sampler.sampled_measure
    rel = math.hypot(se_n / mean_n if mean_n else 0.0, calibration.std_error / alpha)
    return CroftonEstimate(
        samples=int(samples),
        mean_n=mean_n,
        mean_n2=mom["mean_n2"][0],
        mean_n_n_minus_1=mom["mean_n_n_minus_1"][0],
        histogram=tuple(int(h) for h in hist),
        alpha_calibration=alpha,
        alpha_std_error=calibration.std_error,
        sampled_measure=sampler.sampled_measure,
        area_estimate=area,
        area_std_error=area * rel,
        std_errors={name: se for name, (_, se) in mom.items()},
    )


@dataclass(frozen=True)
class ConvexityVerdict:
    verdict: str
    multi_hit_lines: int
    samples: int
    p_value: float
    rate_upper_bound: float
    artifact_rate: float

    def as_dict(self) -> dict:
        return asdict(self)


def convexity_test(
    sampler: LineSampler,
    boundary: Target,
    samples: int,
    significance: float = SIGNIFICANCE,
    artifact_rate: float = ARTIFACT_RATE,
) -> ConvexityVerdict:
    """Lines meeting the boundary 3+ times, tested against a null rate of `artifact_rate`.

    nonconvex: P(Binomial(samples, artifact_rate) >= observed) < significance.
    convex: the one-sided (1 - significance) Clopper-Pearson upper bound on the
    multi-hit rate is at most artifact_rate, i.e. the sample was large enough
    to have seen a real violation.  Otherwise inconclusive.
    """
    if samples < 10_000:
        raise BadParams(f"convexity test needs at least 1e4 lines, got {samples}")
    if not 0 < significance < 1:
        raise BadParams("significance must lie in (0, 1)")
    shape = _shape_of(boundary)
    sampler.check_encloses(boundary)
    hist = _count_histogram(sampler, shape, int(samples), ESTIMATE_STREAM)
    k = int(hist[3:].sum())
    p_value = float(stats.binom.sf(k - 1, samples, artifact_rate))
    upper = 1.0 if k >= samples else float(stats.beta.ppf(1.0 - significance, k + 1, samples - k))
    if p_value < significance:
        verdict = "nonconvex"
    elif upper <= artifact_rate:
        verdict = "convex"
    else:
        verdict = "inconclusive"
    return ConvexityVerdict(verdict, k, int(samples), p_value, upper, artifact_rate)


@dataclass(frozen=True)
class CrossValidation:
    mc_energy_estimate: float
    mc_std_error: float
    quadrature_energy: float
    relative_gap: float
    combined_relative_error: float

    def as_dict(self) -> dict:
        return asdict(self)


def cross_validate_energy(
    sampler: LineSampler,
    boundary: Target,
    samples: int,
    calibration: AlphaCalibration | None = None,
) -> CrossValidation:
    """Line-statistics estimate c_n * alpha * E[n(n-1)] * measure vs. the quadrature energy.

    Summing n_l(S_i) n_l(S_j) over ordered pairs of distinct patches gives
    n(n-1) per line, and each off-diagonal pair integrates to the pair kernel
    divided by alpha c_n, so both numbers estimate the same double integral.
    """
    est = estimate(sampler, boundary, samples, calibration)
    b = boundary if isinstance(boundary, DiscreteBoundary) else geometry.discretize(boundary)
    quad = energy.total_energy(b).energy
    cn = energy.c_constant(b.dimension)
    mc = cn * est.alpha_calibration * est.mean_n_n_minus_1 * est.sampled_measure
    se_m = est.std_errors["mean_n_n_minus_1"] / est.mean_n_n_minus_1 if est.mean_n_n_minus_1 else 0.0
    rel = math.hypot(se_m, est.alpha_std_error / est.alpha_calibration)
    return CrossValidation(mc, mc * rel, quad, abs(mc - quad) / quad, rel)


# ---------------------------------------------------------------------------
# direction law of lines through a small patch


def _cosine_cdf(theta: np.ndarray, dimension: int) -> np.ndarray:
    if dimension == 2:
        return 0.5 * (1.0 + np.sin(theta))  # density cos(t)/2 on [-pi/2, pi/2]
    return np.sin(theta) ** 2  # density 2 cos(t) sin(t) on [0, pi/2]


def _uniform_cdf(theta: np.ndarray, dimension: int) -> np.ndarray:
    if dimension == 2:
        return theta / np.pi + 0.5
    return 1.0 - np.cos(theta)


@dataclass(frozen=True)
class DirectionFit:
    hits: int
    bins: int
    chi2: float
    p_value: float
    uniform_chi2: float
    uniform_p_value: float
    edges: tuple
    observed: tuple

    def as_dict(self) -> dict:
        return asdict(self)


def incidence_angles(sampler: LineSampler, boundary: DiscreteBoundary, element_index: int, samples: int):
    """Angles between the element normal and the lines (out of `samples` draws) that cross it.

    2D: signed angle in [-pi/2, pi/2]; 3D: polar angle in [0, pi/2].
    """
    shape = _shape_of(boundary)
    m = len(boundary)
    if not 0 <= element_index < m:
        raise IndexOutOfRange(f"element index {element_index} outside [0, {m})")
    if isinstance(shape, PolygonBoundary):
        corners = np.asarray(shape.vertices)[[element_index, (element_index + 1) % m]]
        tris = np.zeros((1, 3), dtype=np.int64)
    else:
        corners = np.asarray(shape.vertices)[shape.triangles[element_index]]
        tris = np.array(shape.triangles, dtype=np.int64)
    reach = np.linalg.norm(corners - np.asarray(sampler.center), axis=1).max()
    if reach > sampler.radius:
        raise BallTooSmall(f"element reaches {reach:.6g} from the center, radius is {sampler.radius:.6g}")
    nrm = boundary.normals[element_index]
    # numba kernels get writable copies: read-only array arguments crash inlined helpers
    verts = np.array(shape.vertices, dtype=float)
    out = []
    for start in range(0, samples, BLOCK):
        p, d = sampler.draw(start, min(BLOCK, samples - start))
        p, d = np.ascontiguousarray(p), np.ascontiguousarray(d)
        hit = _kernels.lines_hit_primitive(p, d, verts, tris, element_index)
        d = d[hit]
        cos = d @ nrm
        d = d * np.where(cos < 0, -1.0, 1.0)[:, None]
        cos = np.abs(cos)
        if boundary.dimension == 2:
            tangent = np.array([-nrm[1], nrm[0]])
            out.append(np.arctan2(d @ tangent, cos))
        else:
            out.append(np.arccos(np.clip(cos, 0.0, 1.0)))
    return np.concatenate(out)


def direction_density_test(
    sampler: LineSampler,
    boundary: DiscreteBoundary,
    element_index: int,
    samples: int,
    bins: int = 16,
) -> DirectionFit:
    """Chi-square fit of incidence angles to the cosine law, and to the uniform-direction law."""
    if bins < 8:
        raise BadParams("direction test needs at least 8 bins")
    theta = incidence_angles(sampler, boundary, element_index, samples)
    if len(theta) < 1000:
        raise TooFewHits(f"only {len(theta)} of {samples} lines crossed element {element_index}")
    dim = boundary.dimension
    lo = -np.pi / 2 if dim == 2 else 0.0
    edges = np.linspace(lo, np.pi / 2, bins + 1)
    observed = np.histogram(theta, bins=edges)[0]
    hits = int(observed.sum())
    results = []
    for cdf in (_cosine_cdf, _uniform_cdf):
        expected = hits * np.diff(cdf(edges, dim))
        expected *= hits / expected.sum()
        results.append(stats.chisquare(observed, expected))
    return DirectionFit(
        hits=hits,
        bins=bins,
        chi2=float(results[0].statistic),
        p_value=float(results[0].pvalue),
        uniform_chi2=float(results[1].statistic),
        uniform_p_value=float(results[1].pvalue),
        edges=tuple(float(e) for e in edges),
        observed=tuple(int(o) for o in observed),
    )
