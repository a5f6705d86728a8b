"""Shapes, transforms, and host-side geometric queries.

Four shape kinds cover the whole scene suite: analytic spheres, parallelogram
quads, axis-aligned boxes, and triangle meshes.  Boxes and quads are lowered
to triangles for the compiled ray kernels, but keep exact analytic area
sampling and intersection here for oracle tests.  All coordinates are
world-space; transforms are applied when a shape is constructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import SceneFormatError, SceneValidationError

Vec3 = tuple[float, float, float]


def _v(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def _t3(a) -> Vec3:
    return (float(a[0]), float(a[1]), float(a[2]))


# ---------------------------------------------------------------------------
# Transforms


@dataclass(frozen=True)
class Transform:
    """Affine transform stored as a 4x4 row-major matrix."""

    m: np.ndarray

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(4))

    @staticmethod
    def translate(x: float, y: float, z: float) -> "Transform":
        m = np.eye(4)
        m[:3, 3] = (x, y, z)
        return Transform(m)

    @staticmethod
    def scale(x: float, y: float | None = None, z: float | None = None) -> "Transform":
        y = x if y is None else y
        z = x if z is None else z
        return Transform(np.diag([x, y, z, 1.0]))

    @staticmethod
    def rotate(axis, degrees: float) -> "Transform":
        a = _v(axis)
        a = a / np.linalg.norm(a)
        c = math.cos(math.radians(degrees))
        s = math.sin(math.radians(degrees))
        x, y, z = a
        r = np.array(
            [
                [c + x * x * (1 - c), x * y * (1 - c) - z * s, x * z * (1 - c) + y * s],
                [y * x * (1 - c) + z * s, c + y * y * (1 - c), y * z * (1 - c) - x * s],
                [z * x * (1 - c) - y * s, z * y * (1 - c) + x * s, c + z * z * (1 - c)],
            ]
        )
        m = np.eye(4)
        m[:3, :3] = r
        return Transform(m)

    @staticmethod
    def lookat(origin, target, up) -> "Transform":
        o = _v(origin)
        fwd = _v(target) - o
        n = np.linalg.norm(fwd)
        if n == 0.0:
            raise SceneValidationError("lookat target coincides with origin")
        fwd = fwd / n
        right = np.cross(fwd, _v(up))
        rn = np.linalg.norm(right)
        if rn == 0.0:
            raise SceneValidationError("lookat up vector is parallel to view axis")
        right = right / rn
        true_up = np.cross(right, fwd)
        m = np.eye(4)
        m[:3, 0] = right
        m[:3, 1] = true_up
        m[:3, 2] = fwd
        m[:3, 3] = o
        return Transform(m)

    def __matmul__(self, other: "Transform") -> "Transform":
        return Transform(self.m @ other.m)

    def apply_point(self, p) -> np.ndarray:
        p = _v(p)
        return self.m[:3, :3] @ p + self.m[:3, 3]

    def apply_vector(self, v) -> np.ndarray:
        return self.m[:3, :3] @ _v(v)

    def apply_normal(self, n) -> np.ndarray:
        inv_t = np.linalg.inv(self.m[:3, :3]).T
        out = inv_t @ _v(n)
        return out / np.linalg.norm(out)

    def uniform_scale(self, tol: float = 1e-9) -> float:
        """Scale factor if the linear part is rotation times uniform scale.

        Raises SceneValidationError otherwise; spheres only survive such
        transforms, anything else would need an ellipsoid primitive.
        """
        a = self.m[:3, :3]
        g = a.T @ a
        s2 = g[0, 0]
        if not np.allclose(g, np.eye(3) * s2, atol=tol * max(1.0, s2)):
            raise SceneValidationError(
                "transform mixes non-uniform scale or shear; spheres support "
                "only rigid motion plus uniform scaling"
            )
        return math.sqrt(s2)


# ---------------------------------------------------------------------------
# Shapes


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float

    def transformed(self, t: Transform) -> "Sphere":
        s = t.uniform_scale()
        return Sphere(_t3(t.apply_point(self.center)), self.radius * s)


@dataclass(frozen=True)
class Quad:
    """Parallelogram spanned by e1 and e2 from corner; normal = e1 x e2."""

    corner: Vec3
    e1: Vec3
    e2: Vec3

    def transformed(self, t: Transform) -> "Quad":
        return Quad(
            _t3(t.apply_point(self.corner)),
            _t3(t.apply_vector(self.e1)),
            _t3(t.apply_vector(self.e2)),
        )


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; oriented boxes are lowered to quads by the builders."""

    pmin: Vec3
    pmax: Vec3


class TriMesh:
    """Indexed triangle mesh with optional per-vertex shading normals."""

    def __init__(self, positions, faces, normals=None):
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        self.normals = (
            None if normals is None else np.ascontiguousarray(normals, dtype=np.float64)
        )
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise SceneValidationError("mesh positions must be (n, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise SceneValidationError("mesh faces must be (m, 3)")
        if self.faces.size and self.faces.max() >= len(self.positions):
            raise SceneValidationError("mesh face index out of range")
        if self.normals is not None and self.normals.shape != self.positions.shape:
            raise SceneValidationError("mesh normals must match positions")

    def __eq__(self, other):
        if not isinstance(other, TriMesh):
            return NotImplemented
        if not np.array_equal(self.positions, other.positions):
            return False
        if not np.array_equal(self.faces, other.faces):
            return False
        if (self.normals is None) != (other.normals is None):
            return False
        return self.normals is None or np.array_equal(self.normals, other.normals)

    def __repr__(self):
        return f"TriMesh({len(self.positions)} vertices, {len(self.faces)} faces)"

    def transformed(self, t: Transform) -> "TriMesh":
        pos = (t.m[:3, :3] @ self.positions.T).T + t.m[:3, 3]
        normals = None
        if self.normals is not None:
            inv_t = np.linalg.inv(t.m[:3, :3]).T
            normals = (inv_t @ self.normals.T).T
            normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        return TriMesh(pos, self.faces.copy(), normals)


Shape = Union[Sphere, Quad, Box, TriMesh]


@dataclass
class SurfaceHit:
    """Nearest intersection along a ray, in world space."""

    t: float
    p: np.ndarray
    n_geo: np.ndarray
    n_shade: np.ndarray


# ---------------------------------------------------------------------------
# Areas and bounds


def shape_area(shape: Shape) -> float:
    if isinstance(shape, Sphere):
        return 4.0 * math.pi * shape.radius * shape.radius
    if isinstance(shape, Quad):
        return float(np.linalg.norm(np.cross(_v(shape.e1), _v(shape.e2))))
    if isinstance(shape, Box):
        d = _v(shape.pmax) - _v(shape.pmin)
        return float(2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0]))
    if isinstance(shape, TriMesh):
        p = shape.positions
        f = shape.faces
        c = np.cross(p[f[:, 1]] - p[f[:, 0]], p[f[:, 2]] - p[f[:, 0]])
        return float(0.5 * np.linalg.norm(c, axis=1).sum())
    raise TypeError(f"not a shape: {shape!r}")


def shape_bounds(shape: Shape) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(shape, Sphere):
        c = _v(shape.center)
        r = shape.radius
        return c - r, c + r
    if isinstance(shape, Quad):
        corners = np.array(
            [
                shape.corner,
                _v(shape.corner) + shape.e1,
                _v(shape.corner) + shape.e2,
                _v(shape.corner) + _v(shape.e1) + shape.e2,
            ]
        )
        return corners.min(axis=0), corners.max(axis=0)
    if isinstance(shape, Box):
        return _v(shape.pmin), _v(shape.pmax)
    if isinstance(shape, TriMesh):
        return shape.positions.min(axis=0), shape.positions.max(axis=0)
    raise TypeError(f"not a shape: {shape!r}")


_BOX_FACES = (
    # (axis, sign): corner picks, spanning edge axes, chosen so the normal
    # e1 x e2 points outward.
    (0, -1, 2, 1),
    (0, +1, 1, 2),
    (1, -1, 0, 2),
    (1, +1, 2, 0),
    (2, -1, 1, 0),
    (2, +1, 0, 1),
)


def box_quads(box: Box) -> list[Quad]:
    """The six outward-facing parallelogram faces of a box."""
    lo = _v(box.pmin)
    hi = _v(box.pmax)
    size = hi - lo
    quads = []
    for axis, sign, a1, a2 in _BOX_FACES:
        corner = lo.copy()
        if sign > 0:
            corner[axis] = hi[axis]
        e1 = np.zeros(3)
        e2 = np.zeros(3)
        e1[a1] = size[a1]
        e2[a2] = size[a2]
        quads.append(Quad(_t3(corner), _t3(e1), _t3(e2)))
    return quads


def sample_shape_area(shape: Shape, u1: float, u2: float):
    """Uniform point on the surface: (p, outward n, pdf = 1/area)."""
    if isinstance(shape, Sphere):
        z = 1.0 - 2.0 * u1
        r = math.sqrt(max(0.0, 1.0 - z * z))
        phi = 2.0 * math.pi * u2
        n = np.array([r * math.cos(phi), r * math.sin(phi), z])
        p = _v(shape.center) + shape.radius * n
        return p, n, 1.0 / shape_area(shape)
    if isinstance(shape, Quad):
        e1 = _v(shape.e1)
        e2 = _v(shape.e2)
        p = _v(shape.corner) + u1 * e1 + u2 * e2
        n = np.cross(e1, e2)
        area = np.linalg.norm(n)
        return p, n / area, 1.0 / area
    if isinstance(shape, Box):
        quads = box_quads(shape)
        areas = np.array([shape_area(q) for q in quads])
        total = areas.sum()
        cdf = np.cumsum(areas) / total
        idx = int(np.searchsorted(cdf, u1, side="right"))
        idx = min(idx, 5)
        lo = cdf[idx - 1] if idx > 0 else 0.0
        # Rescale u1 to a fresh uniform inside the chosen face.
        u1r = (u1 - lo) / (cdf[idx] - lo)
        p, n, _ = sample_shape_area(quads[idx], u1r, u2)
        return p, n, 1.0 / total
    if isinstance(shape, TriMesh):
        p = shape.positions
        f = shape.faces
        cr = np.cross(p[f[:, 1]] - p[f[:, 0]], p[f[:, 2]] - p[f[:, 0]])
        areas = 0.5 * np.linalg.norm(cr, axis=1)
        total = areas.sum()
        cdf = np.cumsum(areas) / total
        idx = min(int(np.searchsorted(cdf, u1, side="right")), len(f) - 1)
        lo = cdf[idx - 1] if idx > 0 else 0.0
        u1r = (u1 - lo) / (cdf[idx] - lo)
        su = math.sqrt(u1r)
        b0 = 1.0 - su
        b1 = u2 * su
        a, b, c = p[f[idx, 0]], p[f[idx, 1]], p[f[idx, 2]]
        point = b0 * a + b1 * b + (1.0 - b0 - b1) * c
        n = cr[idx] / np.linalg.norm(cr[idx])
        return point, n, 1.0 / total
    raise TypeError(f"not a shape: {shape!r}")


# ---------------------------------------------------------------------------
# Host-side intersection (reference implementation for tests)


def _intersect_sphere(sh: Sphere, o, d, t_min, t_max):
    oc = o - _v(sh.center)
    b = float(np.dot(oc, d))
    c = float(np.dot(oc, oc)) - sh.radius * sh.radius
    disc = b * b - c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t = -b - sq
    if t < t_min or t > t_max:
        t = -b + sq
        if t < t_min or t > t_max:
            return None
    p = o + t * d
    n = (p - _v(sh.center)) / sh.radius
    return SurfaceHit(t, p, n, n)


def _intersect_quad(sh: Quad, o, d, t_min, t_max):
    e1 = _v(sh.e1)
    e2 = _v(sh.e2)
    n = np.cross(e1, e2)
    denom = float(np.dot(d, n))
    if denom == 0.0:
        return None
    t = float(np.dot(_v(sh.corner) - o, n)) / denom
    if t < t_min or t > t_max:
        return None
    q = o + t * d - _v(sh.corner)
    a11 = float(np.dot(e1, e1))
    a12 = float(np.dot(e1, e2))
    a22 = float(np.dot(e2, e2))
    det = a11 * a22 - a12 * a12
    b1 = float(np.dot(q, e1))
    b2 = float(np.dot(q, e2))
    u = (a22 * b1 - a12 * b2) / det
    v = (a11 * b2 - a12 * b1) / det
    if u < 0.0 or u > 1.0 or v < 0.0 or v > 1.0:
        return None
    nn = n / np.linalg.norm(n)
    return SurfaceHit(t, o + t * d, nn, nn)


def _intersect_box(sh: Box, o, d, t_min, t_max):
    lo = _v(sh.pmin)
    hi = _v(sh.pmax)
    t0, t1 = t_min, t_max
    axis_in = -1
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < lo[a] or o[a] > hi[a]:
                return None
            continue
        inv = 1.0 / d[a]
        near = (lo[a] - o[a]) * inv
        far = (hi[a] - o[a]) * inv
        if near > far:
            near, far = far, near
        if near > t0:
            t0 = near
            axis_in = a
        t1 = min(t1, far)
        if t0 > t1:
            return None
    if axis_in >= 0 and t0 > t_min:
        t = t0
        axis = axis_in
    else:
        # Ray starts inside; exit through the far slab.
        t = t1
        axis = -1
        best = math.inf
        for a in range(3):
            if d[a] == 0.0:
                continue
            inv = 1.0 / d[a]
            far = max((lo[a] - o[a]) * inv, (hi[a] - o[a]) * inv)
            if far < best:
                best = far
                axis = a
        if t < t_min or t > t_max:
            return None
    p = o + t * d
    n = np.zeros(3)
    n[axis] = -1.0 if d[axis] > 0.0 else 1.0
    return SurfaceHit(t, p, n, n)


def _intersect_triangle(a, b, c, o, d, t_min, t_max):
    e1 = b - a
    e2 = c - a
    pv = np.cross(d, e2)
    det = float(np.dot(e1, pv))
    if abs(det) < 1e-300:
        return None
    inv = 1.0 / det
    tv = o - a
    u = float(np.dot(tv, pv)) * inv
    if u < 0.0 or u > 1.0:
        return None
    qv = np.cross(tv, e1)
    v = float(np.dot(d, qv)) * inv
    if v < 0.0 or u + v > 1.0:
        return None
    t = float(np.dot(e2, qv)) * inv
    if t < t_min or t > t_max:
        return None
    return t, u, v


def intersect_shape(shape: Shape, o, d, t_min: float = 1e-6, t_max: float = math.inf):
    """Nearest hit of a world-space ray against one shape, or None."""
    o = _v(o)
    d = _v(d)
    if isinstance(shape, Sphere):
        return _intersect_sphere(shape, o, d, t_min, t_max)
    if isinstance(shape, Quad):
        return _intersect_quad(shape, o, d, t_min, t_max)
    if isinstance(shape, Box):
        return _intersect_box(shape, o, d, t_min, t_max)
    if isinstance(shape, TriMesh):
        best = None
        p = shape.positions
        for i, (ia, ib, ic) in enumerate(shape.faces):
            res = _intersect_triangle(p[ia], p[ib], p[ic], o, d, t_min, t_max)
            if res is None:
                continue
            t, u, v = res
            if best is None or t < best[0]:
                best = (t, u, v, i)
        if best is None:
            return None
        t, u, v, i = best
        ia, ib, ic = shape.faces[i]
        ng = np.cross(p[ib] - p[ia], p[ic] - p[ia])
        ng = ng / np.linalg.norm(ng)
        ns = ng
        if shape.normals is not None:
            w = 1.0 - u - v
            ns = (
                w * shape.normals[ia]
                + u * shape.normals[ib]
                + v * shape.normals[ic]
            )
            ns = ns / np.linalg.norm(ns)
        return SurfaceHit(t, o + t * d, ng, ns)
    raise TypeError(f"not a shape: {shape!r}")


# ---------------------------------------------------------------------------
# OBJ subset


def parse_obj(text: str) -> TriMesh:
    """Parse the v/vn/f subset of Wavefront OBJ; polygons are fan-split."""
    positions: list[tuple[float, float, float]] = []
    normals: list[tuple[float, float, float]] = []
    face_pos: list[tuple[int, int, int]] = []
    face_norm: list[tuple[int, int, int]] = []
    any_missing_normal = False

    def index_err(line_no, token):
        return SceneFormatError(f"bad OBJ face index {token!r}", line_no, 0)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise SceneFormatError("OBJ vertex needs 3 coordinates", line_no, 0)
            positions.append(tuple(float(x) for x in parts[1:4]))
        elif tag == "vn":
            if len(parts) < 4:
                raise SceneFormatError("OBJ normal needs 3 coordinates", line_no, 0)
            normals.append(tuple(float(x) for x in parts[1:4]))
        elif tag == "f":
            if len(parts) < 4:
                raise SceneFormatError("OBJ face needs at least 3 vertices", line_no, 0)
            vi = []
            ni = []
            for token in parts[1:]:
                fields = token.split("/")
                try:
                    v_idx = int(fields[0])
                except ValueError:
                    raise index_err(line_no, token) from None
                if v_idx <= 0 or v_idx > len(positions):
                    raise index_err(line_no, token)
                vi.append(v_idx - 1)
                n_idx = -1
                if len(fields) == 3 and fields[2]:
                    n_idx = int(fields[2])
                    if n_idx <= 0 or n_idx > len(normals):
                        raise index_err(line_no, token)
                    n_idx -= 1
                ni.append(n_idx)
            for k in range(1, len(vi) - 1):
                face_pos.append((vi[0], vi[k], vi[k + 1]))
                face_norm.append((ni[0], ni[k], ni[k + 1]))
                if min(ni[0], ni[k], ni[k + 1]) < 0:
                    any_missing_normal = True
        # Other tags (vt, o, g, s, mtllib, usemtl) are ignored.

    if not face_pos:
        raise SceneFormatError("OBJ contains no faces", 0, 0)
    pos = np.array(positions)
    if normals and not any_missing_normal:
        # Re-index so each vertex owns one normal; split where needed.
        remap: dict[tuple[int, int], int] = {}
        out_pos: list[np.ndarray] = []
        out_n: list[tuple[float, float, float]] = []
        out_faces = []
        for fp, fn in zip(face_pos, face_norm):
            tri = []
            for v_idx, n_idx in zip(fp, fn):
                key = (v_idx, n_idx)
                if key not in remap:
                    remap[key] = len(out_pos)
                    out_pos.append(pos[v_idx])
                    out_n.append(normals[n_idx])
                tri.append(remap[key])
            out_faces.append(tuple(tri))
        return TriMesh(np.array(out_pos), np.array(out_faces), np.array(out_n))
    return TriMesh(pos, np.array(face_pos), None)


def load_obj(path) -> TriMesh:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_obj(fh.read())


# ---------------------------------------------------------------------------
# Procedural meshes


def _accumulate_normals(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    n = np.zeros_like(positions)
    fn = np.cross(
        positions[faces[:, 1]] - positions[faces[:, 0]],
        positions[faces[:, 2]] - positions[faces[:, 0]],
    )
    for axis in range(3):
        np.add.at(n, faces[:, axis], fn)
    lengths = np.linalg.norm(n, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return n / lengths


def make_grid(
    nx: int,
    nz: int,
    size_x: float,
    size_z: float,
    height: Optional[Callable[[float, float], float]] = None,
    smooth: bool = True,
) -> TriMesh:
    """Regular grid on the XZ plane, +Y up, optionally height-displaced."""
    xs = np.linspace(-size_x / 2.0, size_x / 2.0, nx + 1)
    zs = np.linspace(-size_z / 2.0, size_z / 2.0, nz + 1)
    pos = np.zeros(((nx + 1) * (nz + 1), 3))
    idx = 0
    for iz, z in enumerate(zs):
        for ix, x in enumerate(xs):
            y = height(x, z) if height is not None else 0.0
            pos[idx] = (x, y, z)
            idx += 1
    faces = []
    stride = nx + 1
    for iz in range(nz):
        for ix in range(nx):
            a = iz * stride + ix
            b = a + 1
            c = a + stride
            d = c + 1
            # Winding chosen so flat grids face +Y.
            faces.append((a, d, b))
            faces.append((a, c, d))
    faces = np.array(faces)
    normals = _accumulate_normals(pos, faces) if smooth else None
    return TriMesh(pos, faces, normals)


def make_icosphere(subdivisions: int, radius: float = 1.0) -> TriMesh:
    """Unit icosahedron subdivided and projected onto the sphere."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=np.float64) for v in verts]
    verts = [v / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    pos = np.array(verts) * radius
    normals = np.array(verts)
    return TriMesh(pos, np.array(faces), normals)


def displace_mesh(mesh: TriMesh, amount: Callable[[np.ndarray], float]) -> TriMesh:
    """Offset each vertex along its normal; normals are rebuilt from faces."""
    if mesh.normals is None:
        raise SceneValidationError("displacement needs per-vertex normals")
    offsets = np.array([amount(p) for p in mesh.positions])
    pos = mesh.positions + offsets[:, None] * mesh.normals
    normals = _accumulate_normals(pos, mesh.faces)
    return TriMesh(pos, mesh.faces.copy(), normals)


def make_lathe(profile: list[tuple[float, float]], segments: int) -> TriMesh:
    """Surface of revolution around +Y from an (r, y) profile polyline.

    Profile points with r = 0 become poles.  The surface is smooth-shaded
    and winds outward when the profile runs bottom to top.
    """
    rings: list[list[int]] = []
    verts: list[tuple[float, float, float]] = []
    for r, y in profile:
        if r == 0.0:
            verts.append((0.0, y, 0.0))
            rings.append([len(verts) - 1] * segments)
            continue
        ring = []
        for s in range(segments):
            phi = 2.0 * math.pi * s / segments
            verts.append((r * math.cos(phi), y, r * math.sin(phi)))
            ring.append(len(verts) - 1)
        rings.append(ring)
    faces = []
    for k in range(len(rings) - 1):
        lo = rings[k]
        hi = rings[k + 1]
        for s in range(segments):
            s2 = (s + 1) % segments
            a, b = lo[s], lo[s2]
            c, d = hi[s], hi[s2]
            if a != b:
                faces.append((a, c, b))
            if c != d:
                faces.append((b, c, d))
    pos = np.array(verts)
    faces_arr = np.array(faces)
    normals = _accumulate_normals(pos, faces_arr)
    return TriMesh(pos, faces_arr, normals)
