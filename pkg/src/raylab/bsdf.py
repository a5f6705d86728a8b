"""Material models: evaluation, sampling, and the flat kernel interface.

Five material kinds cover the catalog: smooth diffuse, (rough) conductor,
(rough) dielectric, smooth plastic, and the null boundary used to delimit
participating media.  Directions live in the local shading frame with +z
along the shading normal; wo points toward the previous path vertex and wi
toward the next.

Conventions shared with the integrators:
- sample() reports the lobe value WITHOUT the |cos wi| factor; integrators
  uniformly apply value * |cos| / pdf.  Discrete lobes (mirror reflection,
  smooth refraction) fold 1/|cos| into the value and report the lobe choice
  probability as pdf, so the same update rule holds.
- eval()/pdf cover the continuum lobes only; a pure specular material
  evaluates to zero.  This is exactly the density next-event estimation
  needs for its balance weight.
- Refraction is asymmetric: radiance picks up (eta_o / eta_i)^2 when
  crossing an interface, importance does not.  Callers select the transport
  mode; camera paths use radiance, light/photon paths use importance.

Rough lobes follow Walter et al.'s Beckmann microfacet construction: the
height-uncorrelated Smith shadowing with the rational G1 fit, half-vector
sampling via tan^2(theta) = -alpha^2 ln(1 - u), and the transmission
half-vector h = -(eta_i wi + eta_o wo).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numba import njit

from .errors import SceneValidationError
from .media import DipoleModel, dipole_planar_albedo
from .sampling import sample_beckmann, sample_cosine_hemisphere

Vec3 = tuple[float, float, float]

MAT_DIFFUSE = 0
MAT_CONDUCTOR = 1
MAT_DIELECTRIC = 2
MAT_PLASTIC = 3
MAT_NULL = 4

MAT_PARAMS = 12

# Named roughness levels used throughout the scene suite.
ROUGH_LITTLE = 0.05
ROUGH_MODERATE = 0.2
ROUGH_HIGH = 0.4

# Flag bits returned by bsdf_sample.
SAMPLE_DELTA = 1
SAMPLE_TRANSMITTED = 2


# ---------------------------------------------------------------------------
# Python-side material descriptions


@dataclass(frozen=True)
class Diffuse:
    reflectance: Vec3


@dataclass(frozen=True)
class Conductor:
    eta: Vec3
    k: Vec3
    roughness: float = 0.0


@dataclass(frozen=True)
class Dielectric:
    int_ior: float = 1.5046
    ext_ior: float = 1.000277
    roughness: float = 0.0


@dataclass(frozen=True)
class Plastic:
    diffuse_reflectance: Vec3 = (0.5, 0.5, 0.5)
    ior: float = 1.49
    sss: Optional[DipoleModel] = None

    def effective_reflectance(self) -> Vec3:
        """Base diffuse albedo, substituting the dipole's planar albedo.

        The subsurface term enters every integrator the same way: the
        multiple-scattering exitance of a homogeneous slab replaces the
        coating's diffuse reflectance at material build time.
        """
        if self.sss is None:
            return self.diffuse_reflectance
        albedo = dipole_planar_albedo(self.sss)
        return (
            min(1.0, albedo[0]),
            min(1.0, albedo[1]),
            min(1.0, albedo[2]),
        )


@dataclass(frozen=True)
class Null:
    """Invisible boundary; transitions medium state without scattering."""


Material = Union[Diffuse, Conductor, Dielectric, Plastic, Null]


# RGB complex-IOR fits for the two named metals.  These are the common
# sRGB-primaries fits of the measured spectra, not paper-given values.
COPPER_ETA = (0.200438, 0.924033, 1.10221)
COPPER_K = (3.91295, 2.44763, 2.14219)
GOLD_ETA = (0.143119, 0.374957, 1.44248)
GOLD_K = (3.98316, 2.38572, 1.60322)


def copper(roughness: float = 0.0) -> Conductor:
    return Conductor(COPPER_ETA, COPPER_K, roughness)


def gold(roughness: float = 0.0) -> Conductor:
    return Conductor(GOLD_ETA, GOLD_K, roughness)


def fdr_diffuse(eta: float) -> float:
    """Average internal Fresnel reflectance of a smooth boundary, eta > 1.

    Polynomial fit used by the classical dipole literature.
    """
    if eta <= 1.0:
        raise ValueError("fit is valid for eta > 1 only")
    return -1.440 / (eta * eta) + 0.710 / eta + 0.668 + 0.0636 * eta


def _check_rgb(name: str, rgb: Vec3) -> None:
    for c in rgb:
        if not (0.0 <= c <= 1.0):
            raise SceneValidationError(f"{name} channels must lie in [0, 1], got {rgb}")


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha <= 1.0):
        raise SceneValidationError(f"roughness must lie in [0, 1], got {alpha}")


def material_arrays(materials: list[Material]) -> tuple[np.ndarray, np.ndarray]:
    """Pack materials into the (kind, params) arrays the kernels consume."""
    n = len(materials)
    kind = np.zeros(n, dtype=np.uint8)
    p = np.zeros((n, MAT_PARAMS), dtype=np.float64)
    for i, mat in enumerate(materials):
        if isinstance(mat, Diffuse):
            _check_rgb("diffuse reflectance", mat.reflectance)
            kind[i] = MAT_DIFFUSE
            p[i, 0:3] = mat.reflectance
        elif isinstance(mat, Conductor):
            _check_alpha(mat.roughness)
            kind[i] = MAT_CONDUCTOR
            p[i, 0:3] = mat.eta
            p[i, 3:6] = mat.k
            p[i, 6] = mat.roughness
        elif isinstance(mat, Dielectric):
            if mat.int_ior <= 0.0 or mat.ext_ior <= 0.0:
                raise SceneValidationError("dielectric iors must be positive")
            _check_alpha(mat.roughness)
            kind[i] = MAT_DIELECTRIC
            p[i, 0] = mat.int_ior
            p[i, 1] = mat.ext_ior
            p[i, 2] = mat.roughness
        elif isinstance(mat, Plastic):
            if mat.ior < 1.0:
                raise SceneValidationError("plastic coating ior must be >= 1")
            rho = mat.effective_reflectance()
            _check_rgb("plastic reflectance", rho)
            kind[i] = MAT_PLASTIC
            p[i, 0:3] = rho
            p[i, 3] = mat.ior
            # ior 1 is the index-matched coat: no specular lobe, no internal
            # reflection, and the model collapses to plain diffuse.
            p[i, 4] = fdr_diffuse(mat.ior) if mat.ior > 1.0 else 0.0
            p[i, 5] = 1.0 / (mat.ior * mat.ior)
        elif isinstance(mat, Null):
            kind[i] = MAT_NULL
        else:
            raise SceneValidationError(f"unknown material type {type(mat).__name__}")
    return kind, p


# ---------------------------------------------------------------------------
# Scalar optics


@njit(cache=True, inline="always")
def fresnel_dielectric(cos_i, eta):
    """Unpolarized Fresnel reflectance at a dielectric boundary.

    cos_i is the magnitude of the incident cosine, eta the ratio
    n_transmitted / n_incident.  Returns (F, cos_t); total internal
    reflection yields (1, 0).
    """
    sin2_t = (1.0 - cos_i * cos_i) / (eta * eta)
    if sin2_t >= 1.0:
        return 1.0, 0.0
    cos_t = math.sqrt(1.0 - sin2_t)
    r_par = (eta * cos_i - cos_t) / (eta * cos_i + cos_t)
    r_perp = (cos_i - eta * cos_t) / (cos_i + eta * cos_t)
    return 0.5 * (r_par * r_par + r_perp * r_perp), cos_t


@njit(cache=True, inline="always")
def fresnel_conductor(cos_i, eta, k):
    """Exact unpolarized conductor Fresnel term for one channel."""
    cos2 = cos_i * cos_i
    sin2 = 1.0 - cos2
    t0 = eta * eta - k * k - sin2
    a2b2 = math.sqrt(max(0.0, t0 * t0 + 4.0 * eta * eta * k * k))
    t1 = a2b2 + cos2
    a = math.sqrt(max(0.0, 0.5 * (a2b2 + t0)))
    t2 = 2.0 * a * cos_i
    rs = (t1 - t2) / (t1 + t2)
    t3 = cos2 * a2b2 + sin2 * sin2
    t4 = t2 * sin2
    rp = rs * (t3 - t4) / (t3 + t4)
    return 0.5 * (rs + rp)


@njit(cache=True, inline="always")
def beckmann_d(cos_h, alpha):
    """Beckmann normal distribution; normalized so int D cos dw = 1."""
    if cos_h <= 0.0:
        return 0.0
    cos2 = cos_h * cos_h
    tan2 = (1.0 - cos2) / cos2
    a2 = alpha * alpha
    return math.exp(-tan2 / a2) / (math.pi * a2 * cos2 * cos2)


@njit(cache=True, inline="always")
def beckmann_g1(cos_v, v_dot_h, alpha):
    """Smith masking for one direction, with the sidedness test."""
    if cos_v * v_dot_h <= 0.0:
        return 0.0
    c = abs(cos_v)
    sin_v = math.sqrt(max(0.0, 1.0 - c * c))
    if sin_v == 0.0:
        return 1.0
    a = c / (alpha * sin_v)
    if a >= 1.6:
        return 1.0
    # The rational fit overshoots 1 by ~5e-5 just below the crossover.
    return min(1.0, (3.535 * a + 2.181 * a * a) / (1.0 + 2.276 * a + 2.577 * a * a))


@njit(cache=True, inline="always")
def _smith_g(cos_o, o_dot_h, cos_i, i_dot_h, alpha):
    return beckmann_g1(cos_o, o_dot_h, alpha) * beckmann_g1(cos_i, i_dot_h, alpha)


# ---------------------------------------------------------------------------
# Per-kind evaluation helpers (local frame, continuum lobes)


@njit(cache=True, inline="always")
def _plastic_diffuse(mat_p, m, cos_o, cos_i):
    """Coated-diffuse term shared by eval and sample, per channel."""
    ior = mat_p[m, 3]
    fdr = mat_p[m, 4]
    inv_eta2 = mat_p[m, 5]
    f_o, _ = fresnel_dielectric(cos_o, ior)
    f_i, _ = fresnel_dielectric(cos_i, ior)
    k = (1.0 - f_o) * (1.0 - f_i) * inv_eta2 / math.pi
    r = mat_p[m, 0]
    g = mat_p[m, 1]
    b = mat_p[m, 2]
    return (
        k * r / (1.0 - r * fdr),
        k * g / (1.0 - g * fdr),
        k * b / (1.0 - b * fdr),
        f_o,
    )


@njit(cache=True)
def _dielectric_refract_terms(wo, wi, eta_o, eta_i, alpha):
    """Microfacet transmission terms for directions on opposite sides.

    Treats wo as the outgoing and wi as the incident direction, so the
    returned value transports radiance toward wo (the eta_o^2 factor sits
    on the outgoing side).  pdf is the half-vector density mapped onto wi,
    before the (1 - F) lobe probability which the caller applies.
    """
    # h = -(eta_i wi + eta_o wo), oriented to the upper hemisphere.
    hx = -(eta_i * wi[0] + eta_o * wo[0])
    hy = -(eta_i * wi[1] + eta_o * wo[1])
    hz = -(eta_i * wi[2] + eta_o * wo[2])
    norm = math.sqrt(hx * hx + hy * hy + hz * hz)
    if norm == 0.0:
        return 0.0, 0.0, 0.0
    inv = 1.0 / norm
    if hz < 0.0:
        inv = -inv
    hx *= inv
    hy *= inv
    hz *= inv
    o_dot_h = wo[0] * hx + wo[1] * hy + wo[2] * hz
    i_dot_h = wi[0] * hx + wi[1] * hy + wi[2] * hz
    cos_o = wo[2]
    cos_i = wi[2]
    d = beckmann_d(hz, alpha)
    if d == 0.0:
        return 0.0, 0.0, 0.0
    g = _smith_g(cos_o, o_dot_h, cos_i, i_dot_h, alpha)
    f, _ = fresnel_dielectric(abs(o_dot_h), eta_i / eta_o)
    denom = eta_o * o_dot_h + eta_i * i_dot_h
    if denom == 0.0:
        return 0.0, 0.0, 0.0
    denom2 = denom * denom
    value = (
        abs(o_dot_h * i_dot_h / (cos_o * cos_i))
        * eta_o * eta_o * (1.0 - f) * g * d / denom2
    )
    # dwh/dwi for the transmitted direction.
    jac = eta_i * eta_i * abs(i_dot_h) / denom2
    pdf = d * hz * jac
    return value, pdf, f


# ---------------------------------------------------------------------------
# Kernel interface


@njit(cache=True)
def bsdf_eval(mat_kind, mat_p, m, wo, wi, radiance_mode):
    """Continuum-lobe value and sampling density for the pair (wo, wi).

    Returns (r, g, b, pdf); the value excludes |cos wi|.  pdf is the
    solid-angle density with which bsdf_sample would propose wi from wo,
    including lobe selection probabilities (discrete lobes excluded).
    """
    kind = mat_kind[m]
    if kind == MAT_DIFFUSE:
        if wo[2] <= 0.0 or wi[2] <= 0.0:
            return 0.0, 0.0, 0.0, 0.0
        inv_pi = 1.0 / math.pi
        return (
            mat_p[m, 0] * inv_pi,
            mat_p[m, 1] * inv_pi,
            mat_p[m, 2] * inv_pi,
            wi[2] * inv_pi,
        )

    if kind == MAT_CONDUCTOR:
        alpha = mat_p[m, 6]
        if alpha <= 0.0 or wo[2] <= 0.0 or wi[2] <= 0.0:
            return 0.0, 0.0, 0.0, 0.0
        hx = wo[0] + wi[0]
        hy = wo[1] + wi[1]
        hz = wo[2] + wi[2]
        norm = math.sqrt(hx * hx + hy * hy + hz * hz)
        if norm == 0.0:
            return 0.0, 0.0, 0.0, 0.0
        hx /= norm
        hy /= norm
        hz /= norm
        o_dot_h = wo[0] * hx + wo[1] * hy + wo[2] * hz
        d = beckmann_d(hz, alpha)
        g = _smith_g(wo[2], o_dot_h, wi[2], wi[0] * hx + wi[1] * hy + wi[2] * hz, alpha)
        scale = d * g / (4.0 * wo[2] * wi[2])
        fr = fresnel_conductor(abs(o_dot_h), mat_p[m, 0], mat_p[m, 3])
        fg = fresnel_conductor(abs(o_dot_h), mat_p[m, 1], mat_p[m, 4])
        fb = fresnel_conductor(abs(o_dot_h), mat_p[m, 2], mat_p[m, 5])
        pdf = d * hz / (4.0 * abs(o_dot_h)) if o_dot_h != 0.0 else 0.0
        return fr * scale, fg * scale, fb * scale, pdf

    if kind == MAT_DIELECTRIC:
        alpha = mat_p[m, 2]
        if alpha <= 0.0:
            return 0.0, 0.0, 0.0, 0.0
        int_ior = mat_p[m, 0]
        ext_ior = mat_p[m, 1]
        cos_o = wo[2]
        cos_i = wi[2]
        if cos_o == 0.0 or cos_i == 0.0:
            return 0.0, 0.0, 0.0, 0.0
        eta_o = int_ior if cos_o < 0.0 else ext_ior
        eta_i = int_ior if cos_i < 0.0 else ext_ior
        if cos_o * cos_i > 0.0:
            # Same-side pair: microfacet reflection off either face.
            sign = 1.0 if cos_o > 0.0 else -1.0
            hx = sign * (wo[0] + wi[0])
            hy = sign * (wo[1] + wi[1])
            hz = sign * (wo[2] + wi[2])
            norm = math.sqrt(hx * hx + hy * hy + hz * hz)
            if norm == 0.0:
                return 0.0, 0.0, 0.0, 0.0
            hx /= norm
            hy /= norm
            hz /= norm
            o_dot_h = wo[0] * hx + wo[1] * hy + wo[2] * hz
            i_dot_h = wi[0] * hx + wi[1] * hy + wi[2] * hz
            d = beckmann_d(hz, alpha)
            if d == 0.0:
                return 0.0, 0.0, 0.0, 0.0
            g = _smith_g(cos_o, o_dot_h, cos_i, i_dot_h, alpha)
            f, _ = fresnel_dielectric(abs(o_dot_h), eta_i_over(eta_o, int_ior, ext_ior))
            val = d * g * f / (4.0 * abs(cos_o * cos_i))
            pdf = f * d * hz / (4.0 * abs(o_dot_h)) if o_dot_h != 0.0 else 0.0
            return val, val, val, pdf
        # Opposite sides: transmission.  Radiance arrives from wi and leaves
        # toward wo, so the radiance-mode value treats wo as the outgoing
        # direction; importance transport swaps the roles.  The sampling
        # density always maps the half-vector density onto wi.
        value, pdf_fwd, f_lobe = _dielectric_refract_terms(wo, wi, eta_o, eta_i, alpha)
        if not radiance_mode:
            value, _, _ = _dielectric_refract_terms(wi, wo, eta_i, eta_o, alpha)
        return value, value, value, (1.0 - f_lobe) * pdf_fwd

    if kind == MAT_PLASTIC:
        if wo[2] <= 0.0 or wi[2] <= 0.0:
            return 0.0, 0.0, 0.0, 0.0
        r, g, b, f_o = _plastic_diffuse(mat_p, m, wo[2], wi[2])
        pdf = (1.0 - f_o) * wi[2] / math.pi
        return r, g, b, pdf

    return 0.0, 0.0, 0.0, 0.0


@njit(cache=True, inline="always")
def eta_i_over(eta_o, int_ior, ext_ior):
    """Relative index seen from the wo side (transmitted over incident)."""
    return int_ior / ext_ior if eta_o == ext_ior else ext_ior / int_ior


@njit(cache=True)
def bsdf_sample(mat_kind, mat_p, m, wo, u1, u2, u3, radiance_mode):
    """Draw wi from wo.  Returns (wi, value rgb, pdf, flags).

    flags carries SAMPLE_DELTA and SAMPLE_TRANSMITTED bits; pdf <= 0 marks
    an invalid sample the caller must drop.
    """
    kind = mat_kind[m]
    zero = (0.0, 0.0, 0.0)

    if kind == MAT_DIFFUSE:
        if wo[2] <= 0.0:
            return zero, zero, 0.0, 0
        x, y, z, pdf = sample_cosine_hemisphere(u1, u2)
        inv_pi = 1.0 / math.pi
        value = (mat_p[m, 0] * inv_pi, mat_p[m, 1] * inv_pi, mat_p[m, 2] * inv_pi)
        return (x, y, z), value, pdf, 0

    if kind == MAT_CONDUCTOR:
        if wo[2] <= 0.0:
            return zero, zero, 0.0, 0
        alpha = mat_p[m, 6]
        if alpha <= 0.0:
            wi = (-wo[0], -wo[1], wo[2])
            inv_cos = 1.0 / wi[2]
            fr = fresnel_conductor(wo[2], mat_p[m, 0], mat_p[m, 3]) * inv_cos
            fg = fresnel_conductor(wo[2], mat_p[m, 1], mat_p[m, 4]) * inv_cos
            fb = fresnel_conductor(wo[2], mat_p[m, 2], mat_p[m, 5]) * inv_cos
            return wi, (fr, fg, fb), 1.0, SAMPLE_DELTA
        hx, hy, hz, _ = sample_beckmann(u1, u2, alpha)
        k = 2.0 * (wo[0] * hx + wo[1] * hy + wo[2] * hz)
        wi = (k * hx - wo[0], k * hy - wo[1], k * hz - wo[2])
        if wi[2] <= 0.0:
            return zero, zero, 0.0, 0
        vr, vg, vb, pdf = bsdf_eval(mat_kind, mat_p, m, wo, wi, radiance_mode)
        return wi, (vr, vg, vb), pdf, 0

    if kind == MAT_DIELECTRIC:
        int_ior = mat_p[m, 0]
        ext_ior = mat_p[m, 1]
        alpha = mat_p[m, 2]
        cos_o = wo[2]
        if cos_o == 0.0:
            return zero, zero, 0.0, 0
        outside = cos_o > 0.0
        eta_rel = int_ior / ext_ior if outside else ext_ior / int_ior
        eta_o = ext_ior if outside else int_ior
        eta_t = int_ior if outside else ext_ior

        if alpha <= 0.0:
            f, cos_t = fresnel_dielectric(abs(cos_o), eta_rel)
            if u1 < f:
                wi = (-wo[0], -wo[1], wo[2])
                v = f / abs(wi[2])
                return wi, (v, v, v), f, SAMPLE_DELTA
            inv_eta = 1.0 / eta_rel
            sign = 1.0 if outside else -1.0
            wi = (-wo[0] * inv_eta, -wo[1] * inv_eta, -sign * cos_t)
            w = 1.0 - f
            if radiance_mode:
                w *= (eta_o / eta_t) * (eta_o / eta_t)
            v = w / abs(wi[2])
            return wi, (v, v, v), 1.0 - f, SAMPLE_DELTA | SAMPLE_TRANSMITTED

        hx, hy, hz, _ = sample_beckmann(u1, u2, alpha)
        o_dot_h = wo[0] * hx + wo[1] * hy + wo[2] * hz
        f, _ = fresnel_dielectric(abs(o_dot_h), eta_rel)
        if u3 < f:
            k = 2.0 * o_dot_h
            wi = (k * hx - wo[0], k * hy - wo[1], k * hz - wo[2])
            if wi[2] * cos_o <= 0.0:
                return zero, zero, 0.0, 0
            vr, vg, vb, pdf = bsdf_eval(mat_kind, mat_p, m, wo, wi, radiance_mode)
            if pdf <= 0.0:
                return zero, zero, 0.0, 0
            return wi, (vr, vg, vb), pdf, 0
        # Refract wo through the sampled microfacet.
        h_side = 1.0 if o_dot_h > 0.0 else -1.0
        hhx = hx * h_side
        hhy = hy * h_side
        hhz = hz * h_side
        c = abs(o_dot_h)
        inv_eta = 1.0 / eta_rel
        sin2_t = inv_eta * inv_eta * max(0.0, 1.0 - c * c)
        if sin2_t >= 1.0:
            return zero, zero, 0.0, 0
        cos_t = math.sqrt(1.0 - sin2_t)
        kk = inv_eta * c - cos_t
        wi = (
            -inv_eta * wo[0] + kk * hhx,
            -inv_eta * wo[1] + kk * hhy,
            -inv_eta * wo[2] + kk * hhz,
        )
        if wi[2] * cos_o >= 0.0:
            return zero, zero, 0.0, 0
        vr, vg, vb, pdf = bsdf_eval(mat_kind, mat_p, m, wo, wi, radiance_mode)
        if pdf <= 0.0:
            return zero, zero, 0.0, 0
        return wi, (vr, vg, vb), pdf, SAMPLE_TRANSMITTED

    if kind == MAT_PLASTIC:
        if wo[2] <= 0.0:
            return zero, zero, 0.0, 0
        ior = mat_p[m, 3]
        f_o, _ = fresnel_dielectric(wo[2], ior)
        if u3 < f_o:
            wi = (-wo[0], -wo[1], wo[2])
            v = f_o / abs(wi[2])
            return wi, (v, v, v), f_o, SAMPLE_DELTA
        x, y, z, pdf_cos = sample_cosine_hemisphere(u1, u2)
        wi = (x, y, z)
        r, g, b, _ = _plastic_diffuse(mat_p, m, wo[2], wi[2])
        return wi, (r, g, b), (1.0 - f_o) * pdf_cos, 0

    # Null boundary: handled by the integrator before sampling.
    return zero, zero, 0.0, 0
