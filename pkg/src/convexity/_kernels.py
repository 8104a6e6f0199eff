"""Compiled inner loops.

Everything parallel here is parallel over independent outputs (one energy row,
one line) with a fixed sequential order inside each output, so results do not
depend on the number of threads.
"""

import numpy as np
from numba import njit, prange


def pairwise_sum(values) -> float:
    """Sum with a combination tree that depends only on len(values)."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    while x.size > 1:
        if x.size % 2:
            x = np.concatenate([x[:-1:2] + x[1::2], x[-1:]])
        else:
            x = x[0::2] + x[1::2]
    return float(x[0])


@njit(cache=True, inline="always")
def _pair_kernel(ci, ni, cj, nj, dim):
    a = 0.0
    b = 0.0
    r2 = 0.0
    for k in range(dim):
        d = cj[k] - ci[k]
        a += ni[k] * d
        b += d * nj[k]
        r2 += d * d
    if dim == 2:
        den = r2 * np.sqrt(r2)
    elif dim == 3:
        den = r2 * r2
    else:
        den = r2 ** (0.5 * (dim + 1))
    return abs(a * b) / den


@njit(cache=True, parallel=True)
def energy_rows(centroids, normals, measures):
    """rows[i] = sum_{j != i} kernel(i, j) * m_j, summed in index order."""
    m = measures.shape[0]
    dim = centroids.shape[1]
    rows = np.empty(m)
    for i in prange(m):
        acc = 0.0
        ci = centroids[i]
        ni = normals[i]
        for j in range(m):
            if j != i:
                acc += _pair_kernel(ci, ni, centroids[j], normals[j], dim) * measures[j]
        rows[i] = acc
    return rows


@njit(cache=True)
def polygon_energy_gradient(vertices):
    """Discrete pair energy of a polygon and its gradient w.r.t. the vertices.

    With nu_i = m_i n_i (edge turned -90 degrees) and d = c_j - c_i the pair
    term is |<nu_i, d><d, nu_j>| / |d|^3, which is smooth in the vertices
    away from sign changes of the inner products.
    """
    n = vertices.shape[0]
    c = np.empty((n, 2))
    nu = np.empty((n, 2))
    for i in range(n):
        j = (i + 1) % n
        ex = vertices[j, 0] - vertices[i, 0]
        ey = vertices[j, 1] - vertices[i, 1]
        c[i, 0] = vertices[i, 0] + 0.5 * ex
        c[i, 1] = vertices[i, 1] + 0.5 * ey
        nu[i, 0] = ey
        nu[i, 1] = -ex
    g_c = np.zeros((n, 2))
    g_nu = np.zeros((n, 2))
    energy = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = c[j, 0] - c[i, 0]
            dy = c[j, 1] - c[i, 1]
            r2 = dx * dx + dy * dy
            r3 = r2 * np.sqrt(r2)
            p = nu[i, 0] * dx + nu[i, 1] * dy
            q = dx * nu[j, 0] + dy * nu[j, 1]
            pq = p * q
            row += abs(pq) / r3
            s = 1.0 if pq > 0 else (-1.0 if pq < 0 else 0.0)
            # ordered pair (i, j): the sum over ordered pairs visits (j, i)
            # separately, so only the i-side derivatives are accumulated here
            # and the total is doubled below.
            g_nu[i, 0] += s * q * dx / r3
            g_nu[i, 1] += s * q * dy / r3
            fx = s * (q * nu[i, 0] + p * nu[j, 0]) / r3 - 3.0 * s * pq * dx / (r3 * r2)
            fy = s * (q * nu[i, 1] + p * nu[j, 1]) / r3 - 3.0 * s * pq * dy / (r3 * r2)
            g_c[i, 0] -= fx
            g_c[i, 1] -= fy
        energy += row
    g_c *= 2.0
    g_nu *= 2.0
    grad = np.zeros((n, 2))
    for i in range(n):
        j = (i + 1) % n
        # d nu / d e: nu = (e_y, -e_x)
        gex = -g_nu[i, 1]
        gey = g_nu[i, 0]
        grad[i, 0] += 0.5 * g_c[i, 0] - gex
        grad[i, 1] += 0.5 * g_c[i, 1] - gey
        grad[j, 0] += 0.5 * g_c[i, 0] + gex
        grad[j, 1] += 0.5 * g_c[i, 1] + gey
    return energy, grad


# ---------------------------------------------------------------------------
# line / boundary intersection counting


@njit(cache=True, inline="always")
def _line_hits_box(p, d, lo, hi, dim):
    tmin = -np.inf
    tmax = np.inf
    for k in range(dim):
        if d[k] != 0.0:
            t1 = (lo[k] - p[k]) / d[k]
            t2 = (hi[k] - p[k]) / d[k]
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
        elif p[k] < lo[k] or p[k] > hi[k]:
            return False
    return True


@njit(cache=True, inline="always")
def _side2(p, d, v):
    return d[0] * (v[1] - p[1]) - d[1] * (v[0] - p[0])


@njit(cache=True, inline="always")
def _segment_crossed(p, d, vertices, k):
    # half-open ownership: a vertex with side >= 0 counts as "left"
    n = vertices.shape[0]
    sa = _side2(p, d, vertices[k]) >= 0.0
    sb = _side2(p, d, vertices[(k + 1) % n]) >= 0.0
    return sa != sb


# Generic directions for the symbolic shift p -> p - eps E1 - eps^2 E2 that
# resolves lines passing exactly through a vertex or along an edge.
_E1 = (0.5257311121191336, 0.8506508083520399, 0.1234567890123457)
_E2 = (-0.7071067811865476, 0.3141592653589793, 0.6324555320336759)


@njit(cache=True, inline="always")
def _triple(d, ax, ay, az, bx, by, bz):
    return d[0] * (ay * bz - az * by) + d[1] * (az * bx - ax * bz) + d[2] * (ax * by - ay * bx)


@njit(cache=True, inline="always")
def _edge_sign3(p, d, vertices, a, b):
    # the triple product is always evaluated with the lower index first so
    # both triangles sharing an edge see bit-identical values
    lo = min(a, b)
    hi = max(a, b)
    ux = vertices[lo, 0] - p[0]
    uy = vertices[lo, 1] - p[1]
    uz = vertices[lo, 2] - p[2]
    wx = vertices[hi, 0] - p[0]
    wy = vertices[hi, 1] - p[1]
    wz = vertices[hi, 2] - p[2]
    s = _triple(d, ux, uy, uz, wx, wy, wz)
    if s == 0.0:
        # first- and second-order terms of the shifted line: the sign a real
        # nearby line would see, identical for every triangle on this edge
        ex = wx - ux
        ey = wy - uy
        ez = wz - uz
        s = _triple(d, _E1[0], _E1[1], _E1[2], ex, ey, ez)
        if s == 0.0:
            s = _triple(d, _E2[0], _E2[1], _E2[2], ex, ey, ez)
    pos = s >= 0.0
    if a > b:
        pos = not pos
    return pos


@njit(cache=True, inline="always")
def _triangle_crossed(p, d, vertices, triangles, k):
    i0 = triangles[k, 0]
    i1 = triangles[k, 1]
    i2 = triangles[k, 2]
    s0 = _edge_sign3(p, d, vertices, i0, i1)
    s1 = _edge_sign3(p, d, vertices, i1, i2)
    s2 = _edge_sign3(p, d, vertices, i2, i0)
    return s0 == s1 and s1 == s2


@njit(cache=True, inline="always")
def _primitive_crossed(p, d, vertices, triangles, k):
    if vertices.shape[1] == 2:
        return _segment_crossed(p, d, vertices, k)
    return _triangle_crossed(p, d, vertices, triangles, k)


@njit(cache=True)
def _count_one(p, d, vertices, triangles, lo, hi, left, right, start, count, prim):
    dim = vertices.shape[1]
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[0] = 0
    top = 1
    hits = 0
    while top > 0:
        top -= 1
        node = stack[top]
        if not _line_hits_box(p, d, lo[node], hi[node], dim):
            continue
        if count[node] > 0:
            for s in range(start[node], start[node] + count[node]):
                if _primitive_crossed(p, d, vertices, triangles, prim[s]):
                    hits += 1
        else:
            stack[top] = left[node]
            stack[top + 1] = right[node]
            top += 2
    return hits


@njit(cache=True, parallel=True)
def count_lines(points, directions, vertices, triangles, lo, hi, left, right, start, count, prim):
    out = np.empty(points.shape[0], dtype=np.int64)
    for i in prange(points.shape[0]):
        out[i] = _count_one(
            points[i], directions[i], vertices, triangles, lo, hi, left, right, start, count, prim
        )
    return out


@njit(cache=True, parallel=True)
def lines_hit_primitive(points, directions, vertices, triangles, k):
    out = np.empty(points.shape[0], dtype=np.bool_)
    for i in prange(points.shape[0]):
        out[i] = _primitive_crossed(points[i], directions[i], vertices, triangles, k)
    return out
