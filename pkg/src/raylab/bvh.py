"""Bounding volume hierarchy over flattened primitives.

The scene compiler lowers every shape to two primitive kinds: triangles
(kind 0, stored as p0/e1/e2) and spheres (kind 1, stored as center/radius).
The builder runs in numpy; traversal is compiled and takes a caller-owned
stack so per-ray heap allocation never happens inside render loops.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

PRIM_TRI = 0
PRIM_SPHERE = 1

LEAF_SIZE = 4
STACK_DEPTH = 64


def build_bvh(bmin: np.ndarray, bmax: np.ndarray):
    """Median-split BVH on primitive bounds.

    Returns (node_bmin, node_bmax, node_a, node_b, node_count, order):
    interior nodes have count 0 and children in a/b; leaves have count > 0
    and a = first index into the permutation array `order`.
    """
    n = len(bmin)
    if n == 0:
        raise ValueError("cannot build a hierarchy over zero primitives")
    centroids = 0.5 * (bmin + bmax)
    order = np.arange(n, dtype=np.int64)

    cap = max(1, 2 * n)
    node_bmin = np.empty((cap, 3))
    node_bmax = np.empty((cap, 3))
    node_a = np.zeros(cap, dtype=np.int64)
    node_b = np.zeros(cap, dtype=np.int64)
    node_count = np.zeros(cap, dtype=np.int64)

    n_nodes = 1
    # Each entry: (node index, start, end) over `order`.
    todo = [(0, 0, n)]
    while todo:
        node, start, end = todo.pop()
        idx = order[start:end]
        lo = bmin[idx].min(axis=0)
        hi = bmax[idx].max(axis=0)
        node_bmin[node] = lo
        node_bmax[node] = hi
        count = end - start
        if count <= LEAF_SIZE:
            node_a[node] = start
            node_count[node] = count
            continue
        axis = int(np.argmax(hi - lo))
        keys = centroids[idx, axis]
        mid = count // 2
        part = np.argpartition(keys, mid)
        order[start:end] = idx[part]
        left = n_nodes
        right = n_nodes + 1
        n_nodes += 2
        node_a[node] = left
        node_b[node] = right
        node_count[node] = 0
        todo.append((left, start, start + mid))
        todo.append((right, start + mid, end))

    return (
        np.ascontiguousarray(node_bmin[:n_nodes]),
        np.ascontiguousarray(node_bmax[:n_nodes]),
        node_a[:n_nodes].copy(),
        node_b[:n_nodes].copy(),
        node_count[:n_nodes].copy(),
        order,
    )


@njit(cache=True, inline="always")
def _hit_tri(p0x, p0y, p0z, e1x, e1y, e1z, e2x, e2y, e2z,
             ox, oy, oz, dx, dy, dz, t_min, t_max):
    """Moeller-Trumbore against precomputed edges; returns (t, u, v) or t<0."""
    pvx = dy * e2z - dz * e2y
    pvy = dz * e2x - dx * e2z
    pvz = dx * e2y - dy * e2x
    det = e1x * pvx + e1y * pvy + e1z * pvz
    if abs(det) < 1e-300:
        return -1.0, 0.0, 0.0
    inv = 1.0 / det
    tvx = ox - p0x
    tvy = oy - p0y
    tvz = oz - p0z
    u = (tvx * pvx + tvy * pvy + tvz * pvz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0, 0.0, 0.0
    qvx = tvy * e1z - tvz * e1y
    qvy = tvz * e1x - tvx * e1z
    qvz = tvx * e1y - tvy * e1x
    v = (dx * qvx + dy * qvy + dz * qvz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0, 0.0, 0.0
    t = (e2x * qvx + e2y * qvy + e2z * qvz) * inv
    if t < t_min or t > t_max:
        return -1.0, 0.0, 0.0
    return t, u, v


@njit(cache=True, inline="always")
def _hit_sphere(cx, cy, cz, r, ox, oy, oz, dx, dy, dz, t_min, t_max):
    ocx = ox - cx
    ocy = oy - cy
    ocz = oz - cz
    b = ocx * dx + ocy * dy + ocz * dz
    c = ocx * ocx + ocy * ocy + ocz * ocz - r * r
    disc = b * b - c
    if disc < 0.0:
        return -1.0
    sq = math.sqrt(disc)
    t = -b - sq
    if t < t_min or t > t_max:
        t = -b + sq
        if t < t_min or t > t_max:
            return -1.0
    return t


@njit(cache=True, inline="always")
def _hit_prim(prim_kind, pa, pb, pc, i, ox, oy, oz, dx, dy, dz, t_min, t_max):
    if prim_kind[i] == PRIM_TRI:
        return _hit_tri(
            pa[i, 0], pa[i, 1], pa[i, 2],
            pb[i, 0], pb[i, 1], pb[i, 2],
            pc[i, 0], pc[i, 1], pc[i, 2],
            ox, oy, oz, dx, dy, dz, t_min, t_max,
        )
    t = _hit_sphere(
        pa[i, 0], pa[i, 1], pa[i, 2], pb[i, 0],
        ox, oy, oz, dx, dy, dz, t_min, t_max,
    )
    return t, 0.0, 0.0


@njit(cache=True, inline="always")
def _slab_hit(bmin, bmax, node, ox, oy, oz, ix, iy, iz, t_max):
    t0 = (bmin[node, 0] - ox) * ix
    t1 = (bmax[node, 0] - ox) * ix
    if t0 > t1:
        t0, t1 = t1, t0
    t2 = (bmin[node, 1] - oy) * iy
    t3 = (bmax[node, 1] - oy) * iy
    if t2 > t3:
        t2, t3 = t3, t2
    if t2 > t0:
        t0 = t2
    if t3 < t1:
        t1 = t3
    t4 = (bmin[node, 2] - oz) * iz
    t5 = (bmax[node, 2] - oz) * iz
    if t4 > t5:
        t4, t5 = t5, t4
    if t4 > t0:
        t0 = t4
    if t5 < t1:
        t1 = t5
    return t0 <= t1 and t1 >= 0.0 and t0 <= t_max


@njit(cache=True)
def bvh_intersect(
    node_bmin, node_bmax, node_a, node_b, node_count, order,
    prim_kind, pa, pb, pc,
    ox, oy, oz, dx, dy, dz, t_min, t_max, stack,
):
    """Nearest hit: returns (prim index or -1, t, u, v)."""
    # 1e300 instead of inf keeps 0 * reciprocal finite when the origin sits
    # exactly on a slab plane; the worst case is a conservative node visit.
    ix = 1.0 / dx if dx != 0.0 else 1e300
    iy = 1.0 / dy if dy != 0.0 else 1e300
    iz = 1.0 / dz if dz != 0.0 else 1e300
    best = -1
    best_t = t_max
    best_u = 0.0
    best_v = 0.0
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(node_bmin, node_bmax, node, ox, oy, oz, ix, iy, iz, best_t):
            continue
        count = node_count[node]
        if count > 0:
            start = node_a[node]
            for k in range(count):
                i = order[start + k]
                t, u, v = _hit_prim(
                    prim_kind, pa, pb, pc, i,
                    ox, oy, oz, dx, dy, dz, t_min, best_t,
                )
                if t >= 0.0 and t < best_t:
                    best = i
                    best_t = t
                    best_u = u
                    best_v = v
        else:
            stack[top] = node_a[node]
            stack[top + 1] = node_b[node]
            top += 2
    return best, best_t, best_u, best_v


@njit(cache=True)
def brute_intersect(
    prim_kind, pa, pb, pc, ox, oy, oz, dx, dy, dz, t_min, t_max
):
    """Linear-scan reference with identical tie behavior to the BVH path."""
    best = -1
    best_t = t_max
    best_u = 0.0
    best_v = 0.0
    for i in range(len(prim_kind)):
        t, u, v = _hit_prim(
            prim_kind, pa, pb, pc, i, ox, oy, oz, dx, dy, dz, t_min, best_t
        )
        if t >= 0.0 and t < best_t:
            best = i
            best_t = t
            best_u = u
            best_v = v
    return best, best_t, best_u, best_v
