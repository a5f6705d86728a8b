"""Scene compilation: SceneDescription down to flat arrays for the kernels.

Every shape is lowered to triangles and spheres (the two primitive kinds the
hierarchy traverses), each primitive tagged with its material, emitter, and
medium bindings. The result is a namedtuple of plain arrays plus a handful of
host-side fields (camera packing, scene bounds, feature flags) the render
drivers use for capability checks.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from numba import njit

from .bsdf import Plastic, material_arrays
from .bvh import PRIM_SPHERE, PRIM_TRI, STACK_DEPTH, build_bvh, bvh_intersect
from .emitters import AreaEmitter, emitter_arrays
from .errors import SceneValidationError
from .geometry import Box, Quad, Sphere, TriMesh, box_quads, shape_bounds
from .media import medium_arrays
from .scene import SceneDescription, camera_params, validate_scene
from .vecmath import cross, normalize

Vec3 = tuple[float, float, float]

# Everything a compiled kernel needs; a namedtuple of arrays plus one float
# so it can be passed into @njit functions as a single argument.
SceneArrays = namedtuple(
    "SceneArrays",
    [
        "node_bmin",
        "node_bmax",
        "node_a",
        "node_b",
        "node_count",
        "order",
        "prim_kind",
        "pa",
        "pb",
        "pc",
        "prim_vn",
        "prim_has_vn",
        "prim_material",
        "prim_emitter",
        "prim_interior",
        "prim_exterior",
        "mat_kind",
        "mat_p",
        "emit_kind",
        "emit_p",
        "med_sa",
        "med_ss",
        "t_eps",
    ],
)


@dataclass
class SceneData:
    desc: SceneDescription
    arrays: SceneArrays
    cam_params: np.ndarray
    width: int
    height: int
    bound_center: Vec3
    bound_radius: float
    has_real_media: bool
    has_scatter_media: bool
    has_sss: bool

    @property
    def n_prims(self) -> int:
        return len(self.arrays.prim_kind)

    @property
    def n_emitters(self) -> int:
        return len(self.arrays.emit_kind)


def _flatten_entry(shape, out):
    """Append the primitives of one shape; returns how many were added."""
    kinds, pa, pb, pc, vn, has_vn = out
    before = len(kinds)
    if isinstance(shape, Sphere):
        kinds.append(PRIM_SPHERE)
        pa.append(shape.center)
        pb.append((shape.radius, 0.0, 0.0))
        pc.append((0.0, 0.0, 0.0))
        vn.append(np.zeros(9))
        has_vn.append(0)
    elif isinstance(shape, Quad):
        c = np.asarray(shape.corner)
        e1 = np.asarray(shape.e1)
        e2 = np.asarray(shape.e2)
        # Two triangles with the same winding as e1 x e2.
        for p0, d1, d2 in ((c, e1, e2), (c + e1 + e2, -e1, -e2)):
            kinds.append(PRIM_TRI)
            pa.append(tuple(p0))
            pb.append(tuple(d1))
            pc.append(tuple(d2))
            vn.append(np.zeros(9))
            has_vn.append(0)
    elif isinstance(shape, Box):
        for quad in box_quads(shape):
            _flatten_entry(quad, out)
    elif isinstance(shape, TriMesh):
        pos = shape.positions
        faces = shape.faces
        p0 = pos[faces[:, 0]]
        e1 = pos[faces[:, 1]] - p0
        e2 = pos[faces[:, 2]] - p0
        kinds.extend([PRIM_TRI] * len(faces))
        pa.extend(map(tuple, p0))
        pb.extend(map(tuple, e1))
        pc.extend(map(tuple, e2))
        if shape.normals is not None:
            per_face = shape.normals[faces].reshape(len(faces), 9)
            vn.extend(per_face)
            has_vn.extend([1] * len(faces))
        else:
            vn.extend([np.zeros(9)] * len(faces))
            has_vn.extend([0] * len(faces))
    else:
        raise SceneValidationError(f"cannot compile shape {type(shape).__name__}")
    return len(kinds) - before


def compile_scene(desc: SceneDescription) -> SceneData:
    validate_scene(desc)

    out = ([], [], [], [], [], [])
    prim_shape_entry: list[int] = []
    for s, entry in enumerate(desc.shapes):
        added = _flatten_entry(entry.shape, out)
        prim_shape_entry.extend([s] * added)
    kinds, pa, pb, pc, vn, has_vn = out

    n = len(kinds)
    prim_kind = np.array(kinds, dtype=np.uint8)
    pa = np.array(pa, dtype=np.float64).reshape(n, 3)
    pb = np.array(pb, dtype=np.float64).reshape(n, 3)
    pc = np.array(pc, dtype=np.float64).reshape(n, 3)
    prim_vn = np.array(vn, dtype=np.float64).reshape(n, 9)
    prim_has_vn = np.array(has_vn, dtype=np.uint8)

    # Per-primitive bindings, lowered from the owning shape entry.
    prim_material = np.empty(n, dtype=np.int64)
    prim_emitter = np.full(n, -1, dtype=np.int64)
    prim_interior = np.full(n, -1, dtype=np.int64)
    prim_exterior = np.full(n, -1, dtype=np.int64)
    for i, s in enumerate(prim_shape_entry):
        entry = desc.shapes[s]
        prim_material[i] = entry.material
        if entry.emitter is not None:
            prim_emitter[i] = entry.emitter
        if entry.interior_medium is not None:
            prim_interior[i] = entry.interior_medium
        if entry.exterior_medium is not None:
            prim_exterior[i] = entry.exterior_medium

    # Area emitters and their carrier shapes must agree, and each area
    # emitter must be carried by exactly one shape, or hit crediting and
    # light sampling would disagree about the light's geometry.
    claims = [0] * len(desc.emitters)
    for s, entry in enumerate(desc.shapes):
        if entry.emitter is None:
            continue
        em = desc.emitters[entry.emitter]
        if not isinstance(em, AreaEmitter):
            raise SceneValidationError(
                f"shape {s} claims emitter {entry.emitter}, which is not an "
                f"area emitter"
            )
        if em.shape != entry.shape:
            raise SceneValidationError(
                f"shape {s} and its area emitter disagree about the geometry"
            )
        claims[entry.emitter] += 1
    for e, em in enumerate(desc.emitters):
        if isinstance(em, AreaEmitter) and claims[e] != 1:
            raise SceneValidationError(
                f"area emitter {e} must be carried by exactly one shape, "
                f"got {claims[e]}"
            )

    # World bounds -> bounding sphere for directional/env emission, and the
    # ray epsilon, which scales with the scene so it stays meaningful in
    # both meter-sized rooms and millimeter-sized closeups.
    if desc.shapes:
        lo = np.full(3, math.inf)
        hi = np.full(3, -math.inf)
        for entry in desc.shapes:
            b0, b1 = shape_bounds(entry.shape)
            lo = np.minimum(lo, b0)
            hi = np.maximum(hi, b1)
        bound_center = tuple((lo + hi) * 0.5)
        bound_radius = 1.01 * float(np.linalg.norm(hi - lo)) * 0.5
        if bound_radius <= 0.0:
            bound_radius = 1.0
    else:
        bound_center = (0.0, 0.0, 0.0)
        bound_radius = 1.0
    t_eps = 1e-4 * bound_radius

    if n > 0:
        prim_lo = np.empty((n, 3))
        prim_hi = np.empty((n, 3))
        tri = prim_kind == PRIM_TRI
        corners = np.stack([pa, pa + pb, pa + pc])
        prim_lo[tri] = corners[:, tri].min(axis=0)
        prim_hi[tri] = corners[:, tri].max(axis=0)
        sph = ~tri
        prim_lo[sph] = pa[sph] - pb[sph, 0:1]
        prim_hi[sph] = pa[sph] + pb[sph, 0:1]
        bvh = build_bvh(prim_lo, prim_hi)
    else:
        # A single unreachable node so the kernels need no empty-scene
        # special case. NaN bounds fail every slab comparison; infinities
        # would not (opposite-signed products pass the interval test).
        bvh = (
            np.full((1, 3), math.nan),
            np.full((1, 3), math.nan),
            np.zeros(1, dtype=np.int64),
            np.zeros(1, dtype=np.int64),
            np.zeros(1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
        )

    mat_kind, mat_p = material_arrays(desc.materials)
    emit_kind, emit_p = emitter_arrays(desc.emitters, bound_center, bound_radius)
    med_sa, med_ss = medium_arrays(desc.media)

    referenced_media = set()
    referenced_materials = set()
    for entry in desc.shapes:
        referenced_materials.add(entry.material)
        for med in (entry.interior_medium, entry.exterior_medium):
            if med is not None:
                referenced_media.add(med)
    has_real_media = any(
        not desc.media[i].is_vacuum() for i in sorted(referenced_media)
    )
    has_scatter_media = any(
        desc.media[i].has_scatter() for i in sorted(referenced_media)
    )
    has_sss = any(
        isinstance(desc.materials[i], Plastic) and desc.materials[i].sss is not None
        for i in sorted(referenced_materials)
    )

    arrays = SceneArrays(
        node_bmin=bvh[0],
        node_bmax=bvh[1],
        node_a=bvh[2],
        node_b=bvh[3],
        node_count=bvh[4],
        order=bvh[5],
        prim_kind=prim_kind,
        pa=pa,
        pb=pb,
        pc=pc,
        prim_vn=prim_vn,
        prim_has_vn=prim_has_vn,
        prim_material=prim_material,
        prim_emitter=prim_emitter,
        prim_interior=prim_interior,
        prim_exterior=prim_exterior,
        mat_kind=mat_kind,
        mat_p=mat_p,
        emit_kind=emit_kind,
        emit_p=emit_p,
        med_sa=med_sa,
        med_ss=med_ss,
        t_eps=t_eps,
    )
    return SceneData(
        desc=desc,
        arrays=arrays,
        cam_params=camera_params(desc.camera),
        width=desc.camera.width,
        height=desc.camera.height,
        bound_center=bound_center,
        bound_radius=bound_radius,
        has_real_media=has_real_media,
        has_scatter_media=has_scatter_media,
        has_sss=has_sss,
    )


# ---------------------------------------------------------------------------
# Kernel-side helpers over the flattened representation


@njit(cache=True, inline="always")
def scene_hit(sc, ox, oy, oz, dx, dy, dz, t_min, t_max, stack):
    """Nearest primitive hit: (prim or -1, t, u, v)."""
    return bvh_intersect(
        sc.node_bmin, sc.node_bmax, sc.node_a, sc.node_b, sc.node_count, sc.order,
        sc.prim_kind, sc.pa, sc.pb, sc.pc,
        ox, oy, oz, dx, dy, dz, t_min, t_max, stack,
    )


@njit(cache=True, inline="always")
def prim_normals(sc, i, px, py, pz, u, v):
    """Geometric and shading normals at a hit point on primitive i.

    Triangles interpolate vertex normals with barycentric weights
    (1-u-v, u, v) when present; spheres and plain triangles shade with the
    geometric normal. Both normals are unit length; the geometric normal
    follows the primitive winding (outward for spheres and boxes).
    """
    if sc.prim_kind[i] == PRIM_SPHERE:
        inv_r = 1.0 / sc.pb[i, 0]
        n = (
            (px - sc.pa[i, 0]) * inv_r,
            (py - sc.pa[i, 1]) * inv_r,
            (pz - sc.pa[i, 2]) * inv_r,
        )
        n = normalize(n)
        return n, n
    e1 = (sc.pb[i, 0], sc.pb[i, 1], sc.pb[i, 2])
    e2 = (sc.pc[i, 0], sc.pc[i, 1], sc.pc[i, 2])
    ng = normalize(cross(e1, e2))
    if sc.prim_has_vn[i]:
        w0 = 1.0 - u - v
        ns = normalize(
            (
                w0 * sc.prim_vn[i, 0] + u * sc.prim_vn[i, 3] + v * sc.prim_vn[i, 6],
                w0 * sc.prim_vn[i, 1] + u * sc.prim_vn[i, 4] + v * sc.prim_vn[i, 7],
                w0 * sc.prim_vn[i, 2] + u * sc.prim_vn[i, 5] + v * sc.prim_vn[i, 8],
            )
        )
        return ng, ns
    return ng, ng


def make_stack() -> np.ndarray:
    """Traversal stack; one per host-side render call, reused across rays."""
    return np.zeros(STACK_DEPTH, dtype=np.int64)


def scene_intersect(data: SceneData, o, d, t_min=None, t_max=math.inf):
    """Host-side nearest hit for tests and probes: (prim, t, u, v)."""
    sc = data.arrays
    if t_min is None:
        t_min = sc.t_eps
    return scene_hit(
        sc, o[0], o[1], o[2], d[0], d[1], d[2], t_min, t_max, make_stack()
    )
