"""Polygon JSON and Wavefront OBJ (triangles only) readers and writers.

Floats are written with ``repr``, the shortest string that round-trips, so
reading a written file reproduces the shape bit for bit.  Writers go through a
temporary file and a rename so a failed run never leaves a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FileFormatError, ValidationError
from .geometry import PolygonBoundary, Shape, TriangleMeshBoundary, make_mesh, make_polygon


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def polygon_to_json(shape: PolygonBoundary) -> str:
    doc = {"dim": 2, "vertices": [[float(x), float(y)] for x, y in shape.vertices]}
    return json.dumps(doc) + "\n"


def polygon_from_json(text: str) -> PolygonBoundary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("dim") != 2 or "vertices" not in doc:
        raise FileFormatError('expected {"dim": 2, "vertices": [[x, y], ...]}')
    verts = doc["vertices"]
    if not isinstance(verts, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        for p in verts
    ):
        raise FileFormatError("vertices must be a list of [x, y] number pairs")
    return make_polygon(np.array(verts, dtype=float))


def mesh_to_obj(mesh: TriangleMeshBoundary) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in np.asarray(mesh.vertices).tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(mesh.triangles).tolist()]
    return "\n".join(lines) + "\n"


def mesh_from_obj(text: str) -> TriangleMeshBoundary:
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag, args = parts[0], parts[1:]
        if tag == "v":
            if len(args) < 3:
                raise FileFormatError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(a) for a in args[:3]])
            except ValueError:
                raise FileFormatError(f"line {lineno}: bad vertex coordinate") from None
        elif tag == "f":
            if len(args) != 3:
                raise FileFormatError(
                    f"line {lineno}: only triangle faces are supported, got {len(args)} vertices"
                )
            face = []
            for a in args:
                try:
                    k = int(a.split("/", 1)[0])
                except ValueError:
                    raise FileFormatError(f"line {lineno}: bad face index {a!r}") from None
                if k == 0:
                    raise FileFormatError(f"line {lineno}: OBJ indices are 1-based")
                face.append(k - 1 if k > 0 else len(verts) + k)
            faces.append(face)
        # vn, vt, o, g, s, usemtl, mtllib: irrelevant to the boundary
    if not verts or not faces:
        raise FileFormatError("OBJ file has no vertices or no faces")
    f = np.array(faces)
    if f.min() < 0 or f.max() >= len(verts):
        raise FileFormatError("face index out of range")
    return make_mesh(np.array(verts), f)


def shape_to_text(shape: Shape) -> str:
    if isinstance(shape, PolygonBoundary):
        return polygon_to_json(shape)
    return mesh_to_obj(shape)


def save_shape(shape: Shape, path) -> None:
    atomic_write(path, shape_to_text(shape))


def load_shape(path) -> Shape:
    """Read a polygon JSON or OBJ mesh; the format is detected from the content."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileFormatError(f"no such file: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from None
    try:
        if text.lstrip().startswith("{"):
            return polygon_from_json(text)
        return mesh_from_obj(text)
    except FileFormatError:
        raise
    except ValidationError as exc:
        raise type(exc)(f"{path}: {exc}") from None
