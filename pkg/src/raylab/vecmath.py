"""Fixed-size vector helpers shared by the compiled kernels.

Vectors are plain (x, y, z) float tuples inside kernels: tuples stay in
registers under numba, while tiny ndarray temporaries would hit the heap on
every call.  Host code uses numpy arrays and converts at the boundary.
"""

from __future__ import annotations

import math

from numba import njit


@njit(cache=True, inline="always")
def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True, inline="always")
def cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


@njit(cache=True, inline="always")
def length(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@njit(cache=True, inline="always")
def normalize(a):
    inv = 1.0 / math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    return (a[0] * inv, a[1] * inv, a[2] * inv)


@njit(cache=True, inline="always")
def add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


@njit(cache=True, inline="always")
def sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


@njit(cache=True, inline="always")
def scale(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


@njit(cache=True, inline="always")
def mul(a, b):
    return (a[0] * b[0], a[1] * b[1], a[2] * b[2])


@njit(cache=True, inline="always")
def neg(a):
    return (-a[0], -a[1], -a[2])


@njit(cache=True, inline="always")
def max_component(a):
    m = a[0]
    if a[1] > m:
        m = a[1]
    if a[2] > m:
        m = a[2]
    return m


@njit(cache=True, inline="always")
def luminance(rgb):
    return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]


@njit(cache=True, inline="always")
def make_frame(n):
    """Orthonormal tangent and bitangent for unit normal n (branchless)."""
    s = 1.0 if n[2] >= 0.0 else -1.0
    a = -1.0 / (s + n[2])
    b = n[0] * n[1] * a
    t = (1.0 + s * n[0] * n[0] * a, s * b, -s * n[0])
    bt = (b, s + n[1] * n[1] * a, -n[1])
    return t, bt


@njit(cache=True, inline="always")
def to_local(t, b, n, v):
    return (dot(v, t), dot(v, b), dot(v, n))


@njit(cache=True, inline="always")
def to_world(t, b, n, v):
    return (
        t[0] * v[0] + b[0] * v[1] + n[0] * v[2],
        t[1] * v[0] + b[1] * v[1] + n[1] * v[2],
        t[2] * v[0] + b[2] * v[1] + n[2] * v[2],
    )


@njit(cache=True, inline="always")
def reflect(w, n):
    """Mirror w about n; w points away from the surface."""
    k = 2.0 * dot(w, n)
    return (k * n[0] - w[0], k * n[1] - w[1], k * n[2] - w[2])


@njit(cache=True, inline="always")
def refract(w, n, eta):
    """Refract w (away from surface, same side as n) with eta = n_i / n_t.

    Returns (ok, direction); ok is False under total internal reflection.
    """
    cos_i = dot(w, n)
    sin2_t = eta * eta * max(0.0, 1.0 - cos_i * cos_i)
    if sin2_t >= 1.0:
        return False, (0.0, 0.0, 0.0)
    cos_t = math.sqrt(1.0 - sin2_t)
    k = eta * cos_i - cos_t
    return True, (
        -eta * w[0] + k * n[0],
        -eta * w[1] + k * n[1],
        -eta * w[2] + k * n[2],
    )
