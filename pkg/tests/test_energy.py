import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from convexity import energy, geometry
from convexity.errors import (
    BadDimension,
    CoincidentPoints,
    IndexOutOfRange,
    PointOutside,
    PointTooCloseToBoundary,
)


def regular_polygon_energy(n_sides: int) -> float:
    """Closed form of the centroid-quadrature energy of a regular N-gon inscribed in the unit circle.

    Midpoints sit on the circle of radius r = cos(pi/N) with radial normals and
    edge length m = 2 sin(pi/N).  Summed here pair by pair; the sum also has the
    closed form N m^2 cot(pi/2N) / (2r), checked below.
    """
    m = 2 * math.sin(math.pi / n_sides)
    r = math.cos(math.pi / n_sides)
    total = 0.0
    for k in range(1, n_sides):
        half = math.pi * k / n_sides
        dist = 2 * r * math.sin(half)
        proj = r * (1 - math.cos(2 * half))
        total += proj * proj / dist**3
    return n_sides * m * m * total


def c_n_by_quadrature(n: int) -> float:
    """(1/2) int_{S^(n-1)} |w_1|, written as an integral over the polar angle."""
    sphere_area = lambda k: 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)  # |S^k|
    val, _ = integrate.quad(lambda t: abs(math.cos(t)) * math.sin(t) ** (n - 2), 0, math.pi,
                            epsabs=1e-13, epsrel=1e-12, points=[math.pi / 2])
    return 0.5 * sphere_area(n - 2) * val


# --- closed-form oracle -------------------------------------------------------


def test_closed_form_matches_cotangent_formula():
    for n in (5, 17, 128):
        m = 2 * math.sin(math.pi / n)
        r = math.cos(math.pi / n)
        cot = 1 / math.tan(math.pi / (2 * n))
        assert regular_polygon_energy(n) == pytest.approx(n * m * m * cot / (2 * r), rel=1e-12)


@pytest.mark.parametrize("n", [8, 64, 512, 2048])
def test_circle_energy_matches_closed_form(n):
    rep = energy.total_energy(geometry.discretize(geometry.make_shape("circle", n)))
    assert rep.energy == pytest.approx(regular_polygon_energy(n), rel=1e-12)


def test_circle_2048_against_continuum():
    rep = energy.total_energy(geometry.discretize(geometry.make_shape("circle", 2048)))
    assert abs(rep.energy - 4 * math.pi) / (4 * math.pi) < 1e-4
    assert abs(rep.defect) < 1e-4


def test_circle_defect_is_second_order():
    # defect -> pi^2 / (2 N^2)
    for n in (256, 1024):
        d = energy.defect(geometry.discretize(geometry.make_shape("circle", n)))
        assert d == pytest.approx(math.pi**2 / (2 * n * n), rel=0.01)


# --- c_n -----------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
def test_c_n_against_quadrature(n):
    assert energy.c_constant(n) == pytest.approx(c_n_by_quadrature(n), rel=1e-10)


def test_c_n_values():
    assert energy.c_constant(2) == 2.0
    assert energy.c_constant(3) == math.pi
    assert energy.c_constant(4) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_c_n_monte_carlo():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        w = rng.standard_normal((400_000, n))
        w /= np.linalg.norm(w, axis=1)[:, None]
        area = 2 * math.pi if n == 2 else 4 * math.pi
        mc = 0.5 * area * np.abs(w[:, 0]).mean()
        assert mc == pytest.approx(energy.c_constant(n), rel=5e-3)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5, True])
def test_c_n_rejects(bad):
    with pytest.raises(BadDimension):
        energy.c_constant(bad)


def test_line_kernel_integral_is_c2():
    # a point at unit distance from a straight line, w along the normal
    val, _ = integrate.quad(lambda s: 1.0 / (1 + s * s) ** 1.5, -np.inf, np.inf)
    assert val == pytest.approx(2.0, rel=1e-12)


# --- kernel --------------------------------------------------------------------


def test_two_element_example():
    b = geometry.DiscreteBoundary(
        dimension=2,
        centroids=np.array([[0.0, 0.0], [1.0, 0.0]]),
        normals=np.array([[1.0, 0.0], [1.0, 0.0]]),
        measures=np.array([1.0, 1.0]),
    )
    assert energy.total_energy(b).energy == 2.0


def test_kernel_coincident():
    with pytest.raises(CoincidentPoints):
        energy.kernel([0, 0], [1, 0], [0, 0], [0, 1])


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return v / n if n > 1e-3 else None


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=12, max_size=12), st.floats(0, 2 * math.pi),
       st.floats(0.1, 10))
def test_kernel_symmetry_rigid_motion_scaling(vals, theta, s):
    x, y = np.array(vals[0:3]), np.array(vals[3:6])
    nx, ny = unit(vals[6:9]), unit(vals[9:12])
    if nx is None or ny is None or np.linalg.norm(x - y) < 1e-3:
        return
    k = energy.kernel(x, nx, y, ny)
    assert k >= 0
    assert energy.kernel(y, ny, x, nx) == pytest.approx(k, rel=1e-12, abs=1e-300)
    c, si = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -si, 0], [si, c, 0], [0, 0, 1]])
    t = np.array([1.0, -2.0, 0.5])
    moved = energy.kernel(rot @ x + t, rot @ nx, rot @ y + t, rot @ ny)
    assert moved == pytest.approx(k, rel=1e-9, abs=1e-12)
    # homogeneous of degree -(n - 1) = -2 in 3D
    assert energy.kernel(s * x, nx, s * y, ny) == pytest.approx(k / s**2, rel=1e-9, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.01, 100), st.floats(-5, 5), st.floats(-5, 5))
def test_defect_invariant_under_similarity(theta, s, tx, ty):
    base = np.asarray(geometry.make_shape("star", 60).vertices)
    c, si = math.cos(theta), math.sin(theta)
    moved = s * base @ np.array([[c, si], [-si, c]]) + [tx, ty]
    d0 = energy.defect(geometry.discretize(geometry.make_shape("star", 60)))
    d1 = energy.defect(geometry.discretize(geometry.make_polygon(moved)))
    assert d1 == pytest.approx(d0, rel=1e-10)


def test_energy_scales_with_measure_3d():
    m = geometry.make_sphere_mesh(2)
    big = geometry.make_sphere_mesh(2, radius=3.0)
    e1 = energy.total_energy(geometry.discretize(m)).energy
    e3 = energy.total_energy(geometry.discretize(big)).energy
    assert e3 == pytest.approx(9 * e1, rel=1e-12)


# --- sphere --------------------------------------------------------------------


def test_icosphere_energy_and_defect(sphere4):
    rep = energy.total_energy(geometry.discretize(sphere4))
    assert rep.c_n == math.pi
    assert abs(rep.energy - 4 * math.pi**2) / (4 * math.pi**2) < 1e-3
    assert abs(rep.defect) < 5e-3


# --- pointwise integrals ----------------------------------------------------------


def test_pointwise_rows_average_to_energy(star400):
    b = geometry.discretize(star400)
    rows = energy.pointwise_boundary_all(b)
    rep = energy.total_energy(b)
    assert float(np.dot(rows, b.measures)) == pytest.approx(rep.energy, rel=1e-12)
    for i in (0, 17, 399, -1):
        assert energy.pointwise_boundary(b, i) == pytest.approx(rows[i], rel=1e-12)


def test_pointwise_boundary_on_circle(circle1024):
    b = geometry.discretize(circle1024)
    vals = energy.pointwise_boundary_all(b)
    assert np.max(np.abs(vals - 2.0)) < 1e-4
    with pytest.raises(IndexOutOfRange):
        energy.pointwise_boundary(b, 1024)


def test_pointwise_boundary_star_exceeds_on_nonconvex_part(star400):
    b = geometry.discretize(star400)
    vals = energy.pointwise_boundary_all(b)
    assert vals.max() > 2.5
    assert np.mean(vals) > 2.0


@pytest.mark.parametrize("x,w", [((0, 0), (1, 0)), ((0.3, -0.4), (0.6, 0.8)), ((-0.5, 0.1), (0, 1))])
def test_pointwise_interior_circle(circle1024, x, w):
    b = geometry.discretize(circle1024)
    assert energy.pointwise_interior(b, x, w) == pytest.approx(4.0, rel=1e-3)


def test_pointwise_interior_nonconvex_star_point(star400):
    # a direction whose line through the point crosses the star four times
    b = geometry.discretize(star400)
    val = energy.pointwise_interior(b, (0.0, 0.5), (1.0, 0.0))
    assert val > 4.0 * 1.05


def test_pointwise_interior_sphere(sphere4):
    b = geometry.discretize(sphere4)
    val = energy.pointwise_interior(b, (0, 0, 0), (0, 0, 1))
    assert val == pytest.approx(2 * math.pi, rel=2e-3)


def test_pointwise_interior_rejects(circle1024):
    b = geometry.discretize(circle1024)
    with pytest.raises(PointOutside):
        energy.pointwise_interior(b, (2, 0), (1, 0))
    with pytest.raises(PointTooCloseToBoundary):
        energy.pointwise_interior(b, (0.999, 0), (1, 0))


# --- classification ------------------------------------------------------------


@pytest.mark.parametrize("kind,expected", [("circle", True), ("ellipse", True), ("square", True),
                                           ("star", False), ("kidney", False)])
@pytest.mark.parametrize("resolution", [64, 400])
def test_classify(kind, expected, resolution):
    ok, rep, tol = energy.classify(geometry.discretize(geometry.make_shape(kind, resolution)))
    assert ok is expected
    assert tol >= energy.DEFECT_FLOOR


def test_classify_hull(star400):
    hull = geometry.convex_hull(star400, 400)
    ok, rep, tol = energy.classify(geometry.discretize(hull))
    assert ok


def brute_force_polygon_defect(v):
    """Dense numpy evaluation of the centroid-quadrature defect, independent of the kernels."""
    e = np.roll(v, -1, axis=0) - v
    c = v + 0.5 * e
    nm = np.column_stack([e[:, 1], -e[:, 0]])  # unit normal times edge length
    d = c[None, :, :] - c[:, None, :]
    r = np.linalg.norm(d, axis=2)
    np.fill_diagonal(r, 1.0)
    k = np.abs(np.einsum("ik,ijk->ij", nm, d) * np.einsum("ijk,jk->ij", d, nm)) / r**3
    np.fill_diagonal(k, 0.0)
    return k.sum() / np.linalg.norm(e, axis=1).sum() - 2.0


@pytest.mark.parametrize("kind,n", [("star", 97), ("kidney", 120), ("ellipse", 64)])
def test_defect_matches_dense_oracle(kind, n):
    shape = geometry.make_shape(kind, n)
    got = energy.defect(geometry.discretize(shape))
    assert got == pytest.approx(brute_force_polygon_defect(np.asarray(shape.vertices)), rel=1e-11)


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (5.0, 0.3)])
def test_affine_regular_polygon_has_regular_defect(a, b):
    # observed: an affine image of a regular N-gon has the same discrete defect
    circle = energy.defect(geometry.discretize(geometry.make_shape("circle", 400)))
    ell = energy.defect(geometry.discretize(geometry.make_shape("ellipse", 400, a=a, b=b)))
    assert ell == pytest.approx(circle, rel=1e-9)
