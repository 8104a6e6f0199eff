import json
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexity import energy, formats, geometry, svg
from convexity.errors import (
    BadParams,
    DimensionUnsupported,
    FileFormatError,
    NotWatertight,
    SelfIntersecting,
    TooFewVertices,
)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["circle", "ellipse", "square", "star", "kidney"]), st.integers(3, 300))
def test_polygon_json_round_trip_is_exact(kind, n):
    minimum = {"square": 4, "star": 10}.get(kind, 3)
    p = geometry.make_shape(kind, max(n, minimum))
    q = formats.polygon_from_json(formats.polygon_to_json(p))
    assert np.asarray(q.vertices).tobytes() == np.asarray(p.vertices).tobytes()


@pytest.mark.parametrize("k", [0, 2])
def test_mesh_obj_round_trip_is_exact(k):
    m = geometry.make_sphere_mesh(k)
    r = formats.mesh_from_obj(formats.mesh_to_obj(m))
    assert np.asarray(r.vertices).tobytes() == np.asarray(m.vertices).tobytes()
    np.testing.assert_array_equal(r.triangles, m.triangles)


def test_obj_with_extras_and_negative_indices():
    text = """# tetrahedron
o tet
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
vn 0 0 1
f 1/1/1 3/2/1 2/3/1
f 1 2 4
f -4 -1 -2
f 2 3 4
"""
    m = formats.mesh_from_obj(text)
    assert len(m) == 4
    assert m.volume == pytest.approx(1 / 6)


@pytest.mark.parametrize(
    "text,error",
    [("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n", FileFormatError),
     ("v 0 0\nf 1 2 3\n", FileFormatError),
     ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n", FileFormatError),
     ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", TooFewVertices)],
)
def test_obj_errors(text, error):
    with pytest.raises(error):
        formats.mesh_from_obj(text)


@pytest.mark.parametrize(
    "text", ["not json", '{"dim": 3, "vertices": []}', '{"dim": 2, "vertices": [[0, "a"]]}', "[1, 2]"]
)
def test_json_errors(text):
    with pytest.raises(FileFormatError):
        formats.polygon_from_json(text)


def test_obj_open_mesh():
    m = geometry.make_sphere_mesh(0)
    text = formats.mesh_to_obj(m)
    with pytest.raises(NotWatertight):
        formats.mesh_from_obj(text[: text.rindex("f ")])


def test_json_validation_passes_through():
    with pytest.raises(SelfIntersecting):
        formats.polygon_from_json('{"dim": 2, "vertices": [[0,0],[1,1],[1,0],[0,1]]}')


def test_load_detects_format(tmp_path):
    p = geometry.make_shape("star", 20)
    m = geometry.make_sphere_mesh(1)
    formats.save_shape(p, tmp_path / "a.dat")
    formats.save_shape(m, tmp_path / "b.dat")
    assert isinstance(formats.load_shape(tmp_path / "a.dat"), geometry.PolygonBoundary)
    assert isinstance(formats.load_shape(tmp_path / "b.dat"), geometry.TriangleMeshBoundary)
    with pytest.raises(FileFormatError):
        formats.load_shape(tmp_path / "missing.json")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    formats.atomic_write(tmp_path / "x.txt", "hello\n")
    assert sorted(f.name for f in tmp_path.iterdir()) == ["x.txt"]
    assert (tmp_path / "x.txt").read_text() == "hello\n"


# --- SVG -------------------------------------------------------------------------------


def _viewbox(text):
    return [float(x) for x in re.search(r'viewBox="([^"]+)"', text).group(1).split()]


def test_square_svg():
    sq = geometry.make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    text = svg.render_svg(sq)
    assert text.startswith("<?xml")
    d = re.search(r' d="([^"]+)"', text).group(1)
    assert d.count("L") == 3 and d.endswith("Z")
    np.testing.assert_allclose(_viewbox(text), [-0.05, -1.05, 1.1, 1.1])


def test_colors_endpoints():
    assert svg.edge_colors([0.0, 1.0, 0.5]) == ["rgb(0,0,255)", "rgb(255,0,0)", "rgb(128,0,128)"]
    assert svg.edge_colors([2.0, 2.0]) == ["rgb(128,0,128)"] * 2


def test_circle_values_nearly_uniform():
    c = geometry.make_shape("circle", 256)
    vals = energy.pointwise_boundary_all(geometry.discretize(c))
    assert np.ptp(vals) < 1e-3
    text = svg.render_svg(c, vals)
    assert text.count("<line") == 256


def test_star_values_show_notches(star400):
    vals = energy.pointwise_boundary_all(geometry.discretize(star400))
    colors = svg.edge_colors(vals)
    assert "rgb(255,0,0)" in colors and "rgb(0,0,255)" in colors
    assert np.ptp(vals) > 0.5


def test_svg_rejects_meshes_and_bad_values():
    with pytest.raises(DimensionUnsupported):
        svg.render_svg(geometry.make_sphere_mesh(0))
    with pytest.raises(BadParams):
        svg.render_svg(geometry.make_shape("circle", 8), [1.0, 2.0])


def test_energy_report_json_serializable():
    rep = energy.total_energy(geometry.discretize(geometry.make_shape("circle", 64)))
    doc = json.loads(json.dumps(rep.as_dict()))
    assert doc["dimension"] == 2 and doc["element_count"] == 64
