"""Warps from unit-square uniforms to directions and points.

Each sampler returns the sample together with its density so callers never
pair a warp with the wrong pdf.  Directions are in the local frame where the
surface normal is +z unless stated otherwise.
"""

from __future__ import annotations

import math

from numba import njit

INV_PI = 1.0 / math.pi
INV_2PI = 1.0 / (2.0 * math.pi)
INV_4PI = 1.0 / (4.0 * math.pi)


@njit(cache=True, inline="always")
def sample_cosine_hemisphere(u1, u2):
    """Cosine-weighted direction about +z; returns (x, y, z, pdf).

    The radius is sqrt(u1), so u1 = 0 lands exactly on the pole with
    pdf cos(0)/pi = 1/pi.
    """
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    z = math.sqrt(max(0.0, 1.0 - u1))
    return r * math.cos(phi), r * math.sin(phi), z, z * INV_PI


@njit(cache=True, inline="always")
def pdf_cosine_hemisphere(cos_theta):
    return cos_theta * INV_PI if cos_theta > 0.0 else 0.0


@njit(cache=True, inline="always")
def sample_uniform_sphere(u1, u2):
    """Uniform direction on the full sphere; returns (x, y, z, pdf)."""
    z = 1.0 - 2.0 * u1
    r = math.sqrt(max(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * u2
    return r * math.cos(phi), r * math.sin(phi), z, INV_4PI


@njit(cache=True, inline="always")
def sample_uniform_hemisphere(u1, u2):
    z = u1
    r = math.sqrt(max(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * u2
    return r * math.cos(phi), r * math.sin(phi), z, INV_2PI


@njit(cache=True, inline="always")
def sample_uniform_disk(u1, u2):
    """Concentric map of the unit square to the unit disk."""
    ox = 2.0 * u1 - 1.0
    oy = 2.0 * u2 - 1.0
    if ox == 0.0 and oy == 0.0:
        return 0.0, 0.0
    if abs(ox) > abs(oy):
        r = ox
        theta = 0.25 * math.pi * (oy / ox)
    else:
        r = oy
        theta = 0.5 * math.pi - 0.25 * math.pi * (ox / oy)
    return r * math.cos(theta), r * math.sin(theta)


@njit(cache=True, inline="always")
def sample_uniform_triangle(u1, u2):
    """Barycentric coordinates (b0, b1) uniform over a triangle."""
    su = math.sqrt(u1)
    return 1.0 - su, u2 * su


@njit(cache=True, inline="always")
def sample_beckmann(u1, u2, alpha):
    """Beckmann-distributed half vector about +z; returns (x, y, z, pdf).

    tan^2(theta) = -alpha^2 ln(1 - u1); the pdf is D(h) cos(theta).
    """
    tan2 = -alpha * alpha * math.log(max(1e-300, 1.0 - u1))
    cos_t = 1.0 / math.sqrt(1.0 + tan2)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    phi = 2.0 * math.pi * u2
    cos2 = cos_t * cos_t
    d = math.exp(-tan2 / (alpha * alpha)) / (math.pi * alpha * alpha * cos2 * cos2)
    return sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t, d * cos_t
