"""Participating media: homogeneous slabs, isotropic phase, diffusion dipole.

Media are homogeneous with RGB absorption and scattering coefficients and an
isotropic phase function.  Free-flight distances are drawn from a single
exponential using the channel-averaged extinction; the per-channel weights
are applied by the integrator, which knows whether the flight ended inside
the medium or at the far surface.

Subsurface scattering uses the classical two-pole diffusion approximation:
a real source one mean free path below the surface and a mirrored virtual
source above it.  Its diffuse reflectance profile is integrated over the
plane to a single albedo that stands in for a coated material's base
reflectance, which is how every integrator here renders translucent
materials consistently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SceneValidationError
from .sampling import INV_4PI, sample_uniform_sphere

Vec3 = tuple[float, float, float]

MEDIUM_NONE = -1
MEDIUM_STACK_LIMIT = 8


@dataclass(frozen=True)
class HomogeneousMedium:
    sigma_a: Vec3
    sigma_s: Vec3

    def sigma_t(self) -> Vec3:
        return (
            self.sigma_a[0] + self.sigma_s[0],
            self.sigma_a[1] + self.sigma_s[1],
            self.sigma_a[2] + self.sigma_s[2],
        )

    def is_vacuum(self) -> bool:
        st = self.sigma_t()
        return st[0] == 0.0 and st[1] == 0.0 and st[2] == 0.0

    def has_scatter(self) -> bool:
        return max(self.sigma_s) > 0.0


@dataclass(frozen=True)
class DipoleModel:
    """Homogeneous translucent material under the diffusion approximation.

    sigma_s is the reduced scattering coefficient (isotropic equivalent);
    eta is the relative index of the boundary.
    """

    sigma_a: Vec3
    sigma_s: Vec3
    eta: float = 1.3


# ---------------------------------------------------------------------------
# Medium kernels


@njit(cache=True, inline="always")
def transmittance(st_r, st_g, st_b, dist):
    return (
        math.exp(-st_r * dist),
        math.exp(-st_g * dist),
        math.exp(-st_b * dist),
    )


@njit(cache=True, inline="always")
def mean_sigma_t(st_r, st_g, st_b):
    return (st_r + st_g + st_b) / 3.0


@njit(cache=True, inline="always")
def sample_free_flight(st_r, st_g, st_b, u):
    """Exponential flight against the channel-mean extinction.

    Returns (t, sigma_bar); t is inf in a vacuum.  The caller compares t
    with the surface distance and applies the matching per-channel weight:
    scatter inside uses pdf sigma_bar * exp(-sigma_bar t), passing through
    uses the survival probability exp(-sigma_bar t_surf).
    """
    sigma_bar = mean_sigma_t(st_r, st_g, st_b)
    if sigma_bar <= 0.0:
        return math.inf, 0.0
    return -math.log(1.0 - u) / sigma_bar, sigma_bar


@njit(cache=True, inline="always")
def phase_isotropic_eval():
    return INV_4PI


@njit(cache=True, inline="always")
def phase_isotropic_sample(u1, u2):
    x, y, z, pdf = sample_uniform_sphere(u1, u2)
    return x, y, z, pdf


# ---------------------------------------------------------------------------
# Diffusion dipole


def _fdr(eta: float) -> float:
    # Same polynomial fit as the plastic coat; duplicated here to keep the
    # module dependency one-way (bsdf imports media).
    return -1.440 / (eta * eta) + 0.710 / eta + 0.668 + 0.0636 * eta


def dipole_rd(r: float, sigma_a: float, sigma_s_prime: float, eta: float) -> float:
    """Diffuse reflectance profile R_d(r) of the two-pole approximation."""
    sigma_t_prime = sigma_a + sigma_s_prime
    if sigma_t_prime <= 0.0 or sigma_s_prime <= 0.0:
        return 0.0
    alpha_prime = sigma_s_prime / sigma_t_prime
    sigma_tr = math.sqrt(3.0 * sigma_a * sigma_t_prime)
    fdr = _fdr(eta)
    a = (1.0 + fdr) / (1.0 - fdr)
    z_r = 1.0 / sigma_t_prime
    z_v = z_r * (1.0 + 4.0 / 3.0 * a)
    d_r = math.sqrt(r * r + z_r * z_r)
    d_v = math.sqrt(r * r + z_v * z_v)
    term_r = z_r * (sigma_tr * d_r + 1.0) * math.exp(-sigma_tr * d_r) / (d_r ** 3)
    term_v = z_v * (sigma_tr * d_v + 1.0) * math.exp(-sigma_tr * d_v) / (d_v ** 3)
    return alpha_prime * INV_4PI * (term_r + term_v)


def _planar_albedo_channel(sigma_a: float, sigma_s_prime: float, eta: float) -> float:
    """int_0^inf R_d(r) 2 pi r dr by 1024-point quadrature, clamped to [0, 1].

    The profile peaks at the source depth z_r = 1 mfp and decays like
    exp(-sigma_tr r), so the radial axis is log-warped around z_r to resolve
    both scales with one grid regardless of the absorption level.
    """
    if sigma_s_prime <= 0.0:
        return 0.0
    sigma_t_prime = sigma_a + sigma_s_prime
    sigma_tr = math.sqrt(3.0 * sigma_a * sigma_t_prime)
    z_r = 1.0 / sigma_t_prime
    fdr = _fdr(eta)
    z_v = z_r * (1.0 + 4.0 / 3.0 * (1.0 + fdr) / (1.0 - fdr))
    # Far enough that both the exponential and the geometric tails are
    # negligible, without starving the near field of grid points.
    r_max = min(max(60.0 / max(sigma_tr, 1e-300), 2000.0 * z_v), 1.0e6 * z_v)
    n = 1024
    u_max = math.log1p(r_max / z_r)
    du = u_max / n
    total = 0.0
    for i in range(n):
        u = (i + 0.5) * du
        eu = math.exp(u)
        r = z_r * (eu - 1.0)
        dr = z_r * eu * du
        total += dipole_rd(r, sigma_a, sigma_s_prime, eta) * 2.0 * math.pi * r * dr
    return min(1.0, max(0.0, total))


def dipole_planar_albedo(model: DipoleModel) -> Vec3:
    return (
        _planar_albedo_channel(model.sigma_a[0], model.sigma_s[0], model.eta),
        _planar_albedo_channel(model.sigma_a[1], model.sigma_s[1], model.eta),
        _planar_albedo_channel(model.sigma_a[2], model.sigma_s[2], model.eta),
    )


def medium_arrays(media: list[HomogeneousMedium]) -> tuple[np.ndarray, np.ndarray]:
    """Pack media into (sigma_a, sigma_s) float arrays for the kernels."""
    n = len(media)
    sa = np.zeros((n, 3), dtype=np.float64)
    ss = np.zeros((n, 3), dtype=np.float64)
    for i, med in enumerate(media):
        for c in med.sigma_a + med.sigma_s:
            if not (0.0 <= c < math.inf):
                raise SceneValidationError(
                    f"medium coefficients must be finite and >= 0, got {c}"
                )
        sa[i] = med.sigma_a
        ss[i] = med.sigma_s
    return sa, ss
