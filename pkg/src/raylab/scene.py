"""Scene description: camera, film, integrator configuration, shape entries.

A SceneDescription is the parsed, validated form of a scene: immutable
dataclasses with index-based references (shapes name materials, emitters,
and media by position in the scene lists).  The render-ready flattened
arrays are built separately by the scene compiler.

The camera is a pinhole with a vertical field of view; pixel (x, y) plus
two in-pixel uniforms map to a ray through the image plane, with u = (0.5,
0.5) hitting the pixel center and the jitter spanning exactly one pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .bsdf import Material
from .emitters import Emitter
from .errors import SceneValidationError
from .geometry import Shape, Transform
from .media import HomogeneousMedium

Vec3 = tuple[float, float, float]

INTEGRATOR_KINDS = ("pt", "volpath", "volpath-simple", "bdpt", "pm", "pssmlt")

DEFAULT_MAX_DEPTH = 32
DEFAULT_SPP = 64


@dataclass(frozen=True)
class Camera:
    origin: Vec3
    target: Vec3
    up: Vec3
    fov_y_deg: float
    width: int
    height: int


@dataclass(frozen=True)
class IntegratorConfig:
    kind: str = "pt"
    max_depth: int = DEFAULT_MAX_DEPTH
    rr_start_depth: int = 5
    # Photon mapper.
    photon_count: int = 200_000
    gather_k: int = 50
    # Metropolis.
    p_large: float = 0.3
    n_chains: int = 64
    n_bootstrap: int = 65_536


@dataclass(frozen=True)
class ShapeEntry:
    shape: Shape
    material: int
    emitter: Optional[int] = None
    interior_medium: Optional[int] = None
    exterior_medium: Optional[int] = None


@dataclass
class SceneDescription:
    camera: Camera
    integrator: IntegratorConfig
    shapes: list[ShapeEntry]
    materials: list[Material]
    emitters: list[Emitter]
    media: list[HomogeneousMedium] = field(default_factory=list)
    seed: int = 0
    spp: int = DEFAULT_SPP
    warnings: list[str] = field(default_factory=list, compare=False)


def validate_scene(desc: SceneDescription) -> None:
    cam = desc.camera
    if cam.width < 1 or cam.height < 1:
        raise SceneValidationError(f"resolution must be >= 1x1, got {cam.width}x{cam.height}")
    if not (0.0 < cam.fov_y_deg < 180.0):
        raise SceneValidationError(f"fov must lie in (0, 180) degrees, got {cam.fov_y_deg}")
    if desc.integrator.kind not in INTEGRATOR_KINDS:
        raise SceneValidationError(f"unknown integrator kind {desc.integrator.kind!r}")
    if desc.integrator.max_depth < 1:
        raise SceneValidationError("max_depth must be >= 1")
    if not desc.emitters:
        raise SceneValidationError("scene needs at least one emitter")
    n_mat = len(desc.materials)
    n_em = len(desc.emitters)
    n_med = len(desc.media)
    for i, entry in enumerate(desc.shapes):
        if not (0 <= entry.material < n_mat):
            raise SceneValidationError(f"shape {i} references missing material {entry.material}")
        if entry.emitter is not None and not (0 <= entry.emitter < n_em):
            raise SceneValidationError(f"shape {i} references missing emitter {entry.emitter}")
        for med in (entry.interior_medium, entry.exterior_medium):
            if med is not None and not (0 <= med < n_med):
                raise SceneValidationError(f"shape {i} references missing medium {med}")


# ---------------------------------------------------------------------------
# Camera rays


def camera_params(camera: Camera) -> np.ndarray:
    """Flatten the camera into the 14 floats the ray kernel consumes."""
    basis = Transform.lookat(camera.origin, camera.target, camera.up)
    m = basis.m
    right = (m[0, 0], m[1, 0], m[2, 0])
    up = (m[0, 1], m[1, 1], m[2, 1])
    fwd = (m[0, 2], m[1, 2], m[2, 2])
    half_h = math.tan(math.radians(camera.fov_y_deg) * 0.5)
    half_w = half_h * camera.width / camera.height
    return np.array(
        [*camera.origin, *right, *up, *fwd, half_w, half_h],
        dtype=np.float64,
    )


@njit(cache=True)
def camera_ray(params, width, height, px, py, u1, u2):
    """Ray through pixel (px, py) at in-pixel offset (u1, u2)."""
    sx = (2.0 * (px + u1) / width - 1.0) * params[12]
    sy = (1.0 - 2.0 * (py + u2) / height) * params[13]
    dx = params[3] * sx + params[6] * sy + params[9]
    dy = params[4] * sx + params[7] * sy + params[10]
    dz = params[5] * sx + params[8] * sy + params[11]
    inv = 1.0 / math.sqrt(dx * dx + dy * dy + dz * dz)
    return (params[0], params[1], params[2]), (dx * inv, dy * inv, dz * inv)


def generate_camera_ray(
    camera: Camera, px: int, py: int, u1: float, u2: float
) -> tuple[Vec3, Vec3]:
    params = camera_params(camera)
    return camera_ray(params, camera.width, camera.height, float(px), float(py), u1, u2)


# ---------------------------------------------------------------------------
# Film


class Film:
    """Weighted per-pixel accumulator with a 1x1 box reconstruction filter."""

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise SceneValidationError(f"film resolution must be >= 1x1, got {width}x{height}")
        self.width = width
        self.height = height
        self.sum = np.zeros((height, width, 3), dtype=np.float64)
        self.weight = np.zeros((height, width), dtype=np.float64)

    def add_sample(self, x: int, y: int, rgb, weight: float = 1.0) -> None:
        self.sum[y, x, 0] += rgb[0] * weight
        self.sum[y, x, 1] += rgb[1] * weight
        self.sum[y, x, 2] += rgb[2] * weight
        self.weight[y, x] += weight

    def merge(self, other: "Film") -> None:
        self.sum += other.sum
        self.weight += other.weight

    def mean_image(self) -> np.ndarray:
        w = np.where(self.weight > 0.0, self.weight, 1.0)[:, :, None]
        return (self.sum / w).astype(np.float32)
