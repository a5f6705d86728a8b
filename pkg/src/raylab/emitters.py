"""Light sources: area, spot, directional, constant environment.

Area lights emit from the exterior face of a sphere or parallelogram with
uniform surface sampling; radiance toward the interior is exactly zero.
Spot lights fall off linearly in angle between the beam width and the
cutoff.  Directional and environment lights are resolved against the scene
bounding sphere when a surface point is needed (emission sampling).

Direct-lighting samples report solid-angle densities; spot and directional
lights are discrete, reporting pdf 1 with the geometry terms folded into
the returned value so integrators treat all emitters uniformly.  Sampled
values and densities are mutually consistent: pdf_direct(p, wi) returns the
exact density with which sample_direct proposes wi from p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit

from .errors import SceneValidationError
from .geometry import Quad, Sphere
from .sampling import (
    INV_4PI,
    sample_cosine_hemisphere,
    sample_uniform_disk,
    sample_uniform_sphere,
)
from .vecmath import cross, dot, length, make_frame, normalize, sub, to_world

Vec3 = tuple[float, float, float]

EMIT_AREA = 0
EMIT_SPOT = 1
EMIT_DIRECTIONAL = 2
EMIT_ENV = 3

EMIT_PARAMS = 16

_AREA_SPHERE = 0.0
_AREA_QUAD = 1.0


@dataclass(frozen=True)
class AreaEmitter:
    radiance: Vec3
    shape: Union[Sphere, Quad]


@dataclass(frozen=True)
class SpotEmitter:
    intensity: Vec3
    position: Vec3
    direction: Vec3
    cutoff_deg: float = 20.0
    beam_deg: float = 15.0


@dataclass(frozen=True)
class DirectionalEmitter:
    irradiance: Vec3
    direction: Vec3


@dataclass(frozen=True)
class ConstantEnvEmitter:
    radiance: Vec3


Emitter = Union[AreaEmitter, SpotEmitter, DirectionalEmitter, ConstantEnvEmitter]


def is_delta_emitter(emitter: Emitter) -> bool:
    return isinstance(emitter, (SpotEmitter, DirectionalEmitter))


def _check_spectrum(name: str, rgb: Vec3) -> None:
    for c in rgb:
        if not (0.0 <= c < math.inf):
            raise SceneValidationError(f"{name} must be finite and >= 0, got {rgb}")


def emitter_arrays(
    emitters: list[Emitter],
    bound_center: Vec3,
    bound_radius: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Pack emitters into (kind, params) arrays for the kernels.

    The bounding sphere (geometry bounds scaled by 1.01) gives directional
    and environment lights a finite surface to emit from.
    """
    n = len(emitters)
    kind = np.zeros(n, dtype=np.uint8)
    p = np.zeros((n, EMIT_PARAMS), dtype=np.float64)
    for i, em in enumerate(emitters):
        if isinstance(em, AreaEmitter):
            _check_spectrum("area radiance", em.radiance)
            kind[i] = EMIT_AREA
            p[i, 0:3] = em.radiance
            if isinstance(em.shape, Sphere):
                p[i, 3] = _AREA_SPHERE
                p[i, 4:7] = em.shape.center
                p[i, 7] = em.shape.radius
                area = 4.0 * math.pi * em.shape.radius ** 2
            elif isinstance(em.shape, Quad):
                p[i, 3] = _AREA_QUAD
                p[i, 4:7] = em.shape.corner
                p[i, 7:10] = em.shape.e1
                p[i, 10:13] = em.shape.e2
                area = length(cross(em.shape.e1, em.shape.e2))
            else:
                raise SceneValidationError(
                    "area emitters support sphere and quad shapes, got "
                    f"{type(em.shape).__name__}"
                )
            p[i, 13] = area
            p[i, 14] = 1.0 / area
        elif isinstance(em, SpotEmitter):
            _check_spectrum("spot intensity", em.intensity)
            if not (em.cutoff_deg >= em.beam_deg > 0.0):
                raise SceneValidationError(
                    f"spot needs cutoff >= beam > 0, got cutoff {em.cutoff_deg}, "
                    f"beam {em.beam_deg}"
                )
            kind[i] = EMIT_SPOT
            p[i, 0:3] = em.intensity
            p[i, 4:7] = em.position
            p[i, 7:10] = normalize(em.direction)
            p[i, 10] = math.cos(math.radians(em.cutoff_deg))
            p[i, 11] = math.cos(math.radians(em.beam_deg))
            p[i, 12] = math.radians(em.cutoff_deg)
            p[i, 13] = math.radians(em.beam_deg)
        elif isinstance(em, DirectionalEmitter):
            _check_spectrum("directional irradiance", em.irradiance)
            kind[i] = EMIT_DIRECTIONAL
            p[i, 0:3] = em.irradiance
            p[i, 4:7] = normalize(em.direction)
            p[i, 7:10] = bound_center
            p[i, 10] = bound_radius
        elif isinstance(em, ConstantEnvEmitter):
            _check_spectrum("environment radiance", em.radiance)
            kind[i] = EMIT_ENV
            p[i, 0:3] = em.radiance
            p[i, 7:10] = bound_center
            p[i, 10] = bound_radius
        else:
            raise SceneValidationError(f"unknown emitter type {type(em).__name__}")
    return kind, p


# ---------------------------------------------------------------------------
# Kernels


@njit(cache=True, inline="always")
def _spot_falloff(emit_p, e, to_point):
    """Angle-linear falloff; 1 inside the beam, 0 at and beyond the cutoff."""
    axis = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
    c = dot(axis, to_point)
    if c <= emit_p[e, 10]:
        return 0.0
    if c >= emit_p[e, 11]:
        return 1.0
    theta = math.acos(min(1.0, max(-1.0, c)))
    cutoff = emit_p[e, 12]
    beam = emit_p[e, 13]
    return (cutoff - theta) / (cutoff - beam)


@njit(cache=True)
def emitter_sample_direct(emit_kind, emit_p, e, p, u1, u2):
    """Sample a direction toward emitter e from point p.

    Returns (wi, dist, radiance, pdf, is_delta).  For discrete emitters the
    inverse-square and falloff terms are folded into the radiance and pdf
    is 1.  pdf 0 marks a sample that cannot contribute.
    """
    kind = emit_kind[e]
    zero = (0.0, 0.0, 0.0)

    if kind == EMIT_AREA:
        lr = emit_p[e, 0]
        lg = emit_p[e, 1]
        lb = emit_p[e, 2]
        if emit_p[e, 3] == _AREA_SPHERE:
            cx = emit_p[e, 4]
            cy = emit_p[e, 5]
            cz = emit_p[e, 6]
            r = emit_p[e, 7]
            nx, ny, nz, _ = sample_uniform_sphere(u1, u2)
            q = (cx + r * nx, cy + r * ny, cz + r * nz)
            n = (nx, ny, nz)
        else:
            q = (
                emit_p[e, 4] + u1 * emit_p[e, 7] + u2 * emit_p[e, 10],
                emit_p[e, 5] + u1 * emit_p[e, 8] + u2 * emit_p[e, 11],
                emit_p[e, 6] + u1 * emit_p[e, 9] + u2 * emit_p[e, 12],
            )
            e1 = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
            e2 = (emit_p[e, 10], emit_p[e, 11], emit_p[e, 12])
            n = normalize(cross(e1, e2))
        d = sub(q, p)
        dist = length(d)
        if dist < 1e-12:
            return zero, 0.0, zero, 0.0, 0
        wi = (d[0] / dist, d[1] / dist, d[2] / dist)
        cos_l = -dot(n, wi)
        if cos_l <= 1e-12:
            # Back face: a valid sample that carries no radiance.
            return wi, dist, zero, 0.0, 0
        pdf = dist * dist * emit_p[e, 14] / cos_l
        return wi, dist, (lr, lg, lb), pdf, 0

    if kind == EMIT_SPOT:
        pos = (emit_p[e, 4], emit_p[e, 5], emit_p[e, 6])
        d = sub(pos, p)
        dist = length(d)
        if dist < 1e-12:
            return zero, 0.0, zero, 0.0, 1
        wi = (d[0] / dist, d[1] / dist, d[2] / dist)
        fall = _spot_falloff(emit_p, e, (-wi[0], -wi[1], -wi[2]))
        inv_d2 = 1.0 / (dist * dist)
        val = (
            emit_p[e, 0] * fall * inv_d2,
            emit_p[e, 1] * fall * inv_d2,
            emit_p[e, 2] * fall * inv_d2,
        )
        return wi, dist, val, 1.0, 1

    if kind == EMIT_DIRECTIONAL:
        wi = (-emit_p[e, 4], -emit_p[e, 5], -emit_p[e, 6])
        val = (emit_p[e, 0], emit_p[e, 1], emit_p[e, 2])
        return wi, math.inf, val, 1.0, 1

    # Constant environment: uniform sphere, position independent.
    x, y, z, pdf = sample_uniform_sphere(u1, u2)
    val = (emit_p[e, 0], emit_p[e, 1], emit_p[e, 2])
    return (x, y, z), math.inf, val, pdf, 0


@njit(cache=True)
def emitter_pdf_direct(emit_kind, emit_p, e, p, wi):
    """Density with which sample_direct proposes wi from p (0 for delta)."""
    kind = emit_kind[e]

    if kind == EMIT_AREA:
        if emit_p[e, 3] == _AREA_SPHERE:
            oc = (
                p[0] - emit_p[e, 4],
                p[1] - emit_p[e, 5],
                p[2] - emit_p[e, 6],
            )
            r = emit_p[e, 7]
            b = dot(oc, wi)
            c = dot(oc, oc) - r * r
            disc = b * b - c
            if disc <= 0.0:
                return 0.0
            sq = math.sqrt(disc)
            t = -b - sq
            if t < 1e-12:
                t = -b + sq
                if t < 1e-12:
                    return 0.0
            q = (p[0] + t * wi[0], p[1] + t * wi[1], p[2] + t * wi[2])
            n = normalize((q[0] - emit_p[e, 4], q[1] - emit_p[e, 5], q[2] - emit_p[e, 6]))
            cos_l = -dot(n, wi)
            if cos_l <= 1e-12:
                return 0.0
            return t * t * emit_p[e, 14] / cos_l
        corner = (emit_p[e, 4], emit_p[e, 5], emit_p[e, 6])
        e1 = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
        e2 = (emit_p[e, 10], emit_p[e, 11], emit_p[e, 12])
        n = normalize(cross(e1, e2))
        denom = dot(n, wi)
        if abs(denom) < 1e-12:
            return 0.0
        t = dot(sub(corner, p), n) / denom
        if t < 1e-12:
            return 0.0
        hit = (p[0] + t * wi[0] - corner[0], p[1] + t * wi[1] - corner[1],
               p[2] + t * wi[2] - corner[2])
        # Solve hit = a e1 + b e2 through the Gram matrix.
        g11 = dot(e1, e1)
        g12 = dot(e1, e2)
        g22 = dot(e2, e2)
        h1 = dot(hit, e1)
        h2 = dot(hit, e2)
        det = g11 * g22 - g12 * g12
        if det == 0.0:
            return 0.0
        a = (h1 * g22 - h2 * g12) / det
        b2 = (h2 * g11 - h1 * g12) / det
        if a < 0.0 or a > 1.0 or b2 < 0.0 or b2 > 1.0:
            return 0.0
        cos_l = -dot(n, wi)
        if cos_l <= 1e-12:
            return 0.0
        return t * t * emit_p[e, 14] / cos_l

    if kind == EMIT_ENV:
        return INV_4PI

    return 0.0


@njit(cache=True)
def emitter_eval_env(emit_kind, emit_p, n_emitters):
    """Combined radiance of all constant environments (escaped rays)."""
    r = 0.0
    g = 0.0
    b = 0.0
    for e in range(n_emitters):
        if emit_kind[e] == EMIT_ENV:
            r += emit_p[e, 0]
            g += emit_p[e, 1]
            b += emit_p[e, 2]
    return r, g, b


@njit(cache=True)
def emitter_sample_emission(emit_kind, emit_p, e, u1, u2, u3, u4):
    """Sample an emitted ray from emitter e.

    Returns (origin, direction, normal, value, pdf_area, pdf_dir, is_delta_dir).
    value is radiance for area/env, intensity for spot (falloff applied by
    weight), irradiance for directional.  The emitted power estimator is
    value * cos(normal, direction) / (pdf_area * pdf_dir) with the cosine
    dropped for spot/directional/env starts, where no surface cosine exists.
    """
    kind = emit_kind[e]
    zero = (0.0, 0.0, 0.0)
    val = (emit_p[e, 0], emit_p[e, 1], emit_p[e, 2])

    if kind == EMIT_AREA:
        if emit_p[e, 3] == _AREA_SPHERE:
            r = emit_p[e, 7]
            nx, ny, nz, _ = sample_uniform_sphere(u1, u2)
            origin = (
                emit_p[e, 4] + r * nx,
                emit_p[e, 5] + r * ny,
                emit_p[e, 6] + r * nz,
            )
            n = (nx, ny, nz)
        else:
            origin = (
                emit_p[e, 4] + u1 * emit_p[e, 7] + u2 * emit_p[e, 10],
                emit_p[e, 5] + u1 * emit_p[e, 8] + u2 * emit_p[e, 11],
                emit_p[e, 6] + u1 * emit_p[e, 9] + u2 * emit_p[e, 12],
            )
            e1 = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
            e2 = (emit_p[e, 10], emit_p[e, 11], emit_p[e, 12])
            n = normalize(cross(e1, e2))
        lx, ly, lz, pdf_dir = sample_cosine_hemisphere(u3, u4)
        t, b = make_frame(n)
        d = to_world(t, b, n, (lx, ly, lz))
        return origin, d, n, val, emit_p[e, 14], pdf_dir, 0

    if kind == EMIT_SPOT:
        origin = (emit_p[e, 4], emit_p[e, 5], emit_p[e, 6])
        axis = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
        cos_cut = emit_p[e, 10]
        z = 1.0 - u3 * (1.0 - cos_cut)
        phi = 2.0 * math.pi * u4
        s = math.sqrt(max(0.0, 1.0 - z * z))
        local = (s * math.cos(phi), s * math.sin(phi), z)
        t, b = make_frame(axis)
        d = to_world(t, b, axis, local)
        pdf_dir = 1.0 / (2.0 * math.pi * (1.0 - cos_cut))
        fall = _spot_falloff(emit_p, e, d)
        return origin, d, axis, (val[0] * fall, val[1] * fall, val[2] * fall), 1.0, pdf_dir, 0

    if kind == EMIT_DIRECTIONAL:
        d = (emit_p[e, 4], emit_p[e, 5], emit_p[e, 6])
        cx = emit_p[e, 7]
        cy = emit_p[e, 8]
        cz = emit_p[e, 9]
        radius = emit_p[e, 10]
        dx, dy = sample_uniform_disk(u1, u2)
        t, b = make_frame(d)
        offset = to_world(t, b, d, (radius * dx, radius * dy, 0.0))
        origin = (
            cx - radius * d[0] + offset[0],
            cy - radius * d[1] + offset[1],
            cz - radius * d[2] + offset[2],
        )
        pdf_area = 1.0 / (math.pi * radius * radius)
        return origin, d, d, val, pdf_area, 1.0, 1

    # Environment: uniform direction inward, origin on the tangent disk.
    wx, wy, wz, pdf_dir = sample_uniform_sphere(u1, u2)
    d = (wx, wy, wz)
    cx = emit_p[e, 7]
    cy = emit_p[e, 8]
    cz = emit_p[e, 9]
    radius = emit_p[e, 10]
    dx, dy = sample_uniform_disk(u3, u4)
    t, b = make_frame(d)
    offset = to_world(t, b, d, (radius * dx, radius * dy, 0.0))
    origin = (
        cx - radius * d[0] + offset[0],
        cy - radius * d[1] + offset[1],
        cz - radius * d[2] + offset[2],
    )
    pdf_area = 1.0 / (math.pi * radius * radius)
    return origin, d, d, val, pdf_area, pdf_dir, 0


@njit(cache=True)
def emitter_pdf_emission(emit_kind, emit_p, e, n, d):
    """(pdf_area, pdf_dir) of emitting from normal n along d (BDPT weights)."""
    kind = emit_kind[e]
    if kind == EMIT_AREA:
        cos_l = dot(n, d)
        pdf_dir = cos_l / math.pi if cos_l > 0.0 else 0.0
        return emit_p[e, 14], pdf_dir
    if kind == EMIT_SPOT:
        cos_cut = emit_p[e, 10]
        axis = (emit_p[e, 7], emit_p[e, 8], emit_p[e, 9])
        pdf_dir = 0.0
        if dot(axis, d) > cos_cut:
            pdf_dir = 1.0 / (2.0 * math.pi * (1.0 - cos_cut))
        return 1.0, pdf_dir
    radius = emit_p[e, 10]
    pdf_area = 1.0 / (math.pi * radius * radius)
    if kind == EMIT_DIRECTIONAL:
        return pdf_area, 1.0
    return pdf_area, INV_4PI
