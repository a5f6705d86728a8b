"""Compiled unidirectional path-tracing core.

One kernel serves the plain path tracer, both volumetric variants, and the
Metropolis integrator:

- a vacuum medium draws no random numbers, so on scenes whose media are all
  vacuum the volumetric tracer is bit-identical to the plain path tracer;
- the ``mis_full`` flag switches between balance-heuristic weighting of the
  light/BSDF strategies and the plain variant that relies on next event
  estimation alone at continuum vertices;
- random numbers come either from a counter stream or from a caller-supplied
  primary-sample vector, which is what the Metropolis integrator mutates.

Depth counts path segments: a camera ray that reaches an emitter is depth 1,
direct lighting is depth 2.  Null boundaries and medium changes do not
increment depth.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .bsdf import (
    MAT_CONDUCTOR,
    MAT_DIELECTRIC,
    MAT_NULL,
    SAMPLE_DELTA,
    bsdf_eval,
    bsdf_sample,
)
from .bvh import STACK_DEPTH
from .emitters import (
    EMIT_ENV,
    emitter_eval_env,
    emitter_pdf_direct,
    emitter_sample_direct,
)
from .media import (
    MEDIUM_NONE,
    MEDIUM_STACK_LIMIT,
    phase_isotropic_eval,
    phase_isotropic_sample,
    sample_free_flight,
)
from .rng import rng_next, stream_init
from .scene import camera_ray
from .scenedata import prim_normals, scene_hit
from .vecmath import make_frame, to_local, to_world

MODE_STREAM = 0
MODE_PSS = 1

ERR_NONE = 0
ERR_MEDIUM_NESTING = 1

# Hard caps that keep degenerate geometry from hanging a path: boundaries
# crossed without scattering, and surfaces a shadow ray may pass through.
MAX_NULL_CROSSINGS = 256
MAX_SHADOW_SEGMENTS = 64


@njit(cache=True, inline="always")
def draw1(mode, state, pss, idx):
    """One uniform draw from the active source.

    MODE_STREAM advances the counter state; MODE_PSS reads the next
    primary-sample coordinate.  Past the end of the vector the draw is the
    constant 0.5: mutations never touch those coordinates, so the mapped
    path stays a deterministic function of the vector.
    """
    if mode == MODE_STREAM:
        u, state = rng_next(state)
        return u, state, idx
    if idx < pss.shape[0]:
        return pss[idx], state, idx + 1
    return 0.5, state, idx + 1


@njit(cache=True, inline="always")
def _extinction(sc, med):
    return (
        sc.med_sa[med, 0] + sc.med_ss[med, 0],
        sc.med_sa[med, 1] + sc.med_ss[med, 1],
        sc.med_sa[med, 2] + sc.med_ss[med, 2],
    )


@njit(cache=True, inline="always")
def _has_interface(sc, prim):
    return sc.prim_interior[prim] >= 0 or sc.prim_exterior[prim] >= 0


@njit(cache=True, inline="always")
def _cross_interface(sc, prim, into_interior, med, nest):
    """Medium and nesting level after stepping through a boundary prim.

    Boundaries that declare no medium on either side leave the state alone
    (callers check _has_interface first); the nesting level only guards
    against runaway scene constructions, it carries no transport meaning.
    """
    if into_interior:
        return sc.prim_interior[prim], nest + 1
    return sc.prim_exterior[prim], nest - 1 if nest > 0 else 0


@njit(cache=True, inline="always")
def _delta_only_material(sc, m):
    kind = sc.mat_kind[m]
    if kind == MAT_CONDUCTOR:
        return sc.mat_p[m, 6] <= 0.0
    if kind == MAT_DIELECTRIC:
        return sc.mat_p[m, 2] <= 0.0
    return False


@njit(cache=True)
def shadow_transmittance(sc, px, py, pz, dx, dy, dz, dist, med, stack):
    """RGB transmittance from p toward a light sample at distance dist.

    Null boundaries are stepped through, switching the active medium at
    declared interfaces; any other surface blocks the ray.  Homogeneous
    media make each segment's transmittance analytic, so the estimate is
    exact and consumes no random numbers.  dist may be inf (environment
    and directional lights).
    """
    tr_r = 1.0
    tr_g = 1.0
    tr_b = 1.0
    ox = px
    oy = py
    oz = pz
    remaining = dist - sc.t_eps
    for _ in range(MAX_SHADOW_SEGMENTS):
        if remaining <= sc.t_eps:
            return tr_r, tr_g, tr_b
        prim, t, u, v = scene_hit(sc, ox, oy, oz, dx, dy, dz, sc.t_eps, remaining, stack)
        seg = t if prim >= 0 else remaining
        if med >= 0:
            st_r, st_g, st_b = _extinction(sc, med)
            if math.isinf(seg):
                tr_r *= 1.0 if st_r <= 0.0 else 0.0
                tr_g *= 1.0 if st_g <= 0.0 else 0.0
                tr_b *= 1.0 if st_b <= 0.0 else 0.0
            else:
                tr_r *= math.exp(-st_r * seg)
                tr_g *= math.exp(-st_g * seg)
                tr_b *= math.exp(-st_b * seg)
            if tr_r <= 0.0 and tr_g <= 0.0 and tr_b <= 0.0:
                return 0.0, 0.0, 0.0
        if prim < 0:
            return tr_r, tr_g, tr_b
        if sc.mat_kind[sc.prim_material[prim]] != MAT_NULL:
            return 0.0, 0.0, 0.0
        hx = ox + t * dx
        hy = oy + t * dy
        hz = oz + t * dz
        if _has_interface(sc, prim):
            ng, _ = prim_normals(sc, prim, hx, hy, hz, u, v)
            into = dx * ng[0] + dy * ng[1] + dz * ng[2] < 0.0
            med, _nest = _cross_interface(sc, prim, into, med, 0)
        ox = hx
        oy = hy
        oz = hz
        remaining -= t
    return 0.0, 0.0, 0.0


@njit(cache=True)
def trace_path(sc, cam, width, height, px, py, mode, state, pss,
               max_depth, rr_start, mis_full, nee_idx, stack):
    """Estimate radiance along one camera path.

    Returns (r, g, b, film_x, film_y, err).  In MODE_PSS the image position
    comes from the first two vector coordinates; in MODE_STREAM it is the
    given pixel plus jitter.  err is ERR_MEDIUM_NESTING when boundary
    nesting exceeds MEDIUM_STACK_LIMIT, in which case the sample is invalid.

    nee_idx lists the emitters next event estimation may target.  With full
    MIS the driver excludes constant environments from it: BSDF and phase
    sampling are exactly proportional to a constant incident radiance, so
    escapes are credited at weight 1 and a uniform-sphere light sample could
    only add variance.  Without MIS (the plain variant) the list holds every
    emitter, next event estimation is the only light strategy at continuum
    vertices, and emitter hits count only from the camera or through
    discrete bounces.
    """
    n_tgt = nee_idx.shape[0]

    u1, state, idx = draw1(mode, state, pss, 0)
    u2, state, idx = draw1(mode, state, pss, idx)
    if mode == MODE_PSS:
        fx = u1 * width
        fy = u2 * height
        o, d = camera_ray(cam, width, height, 0, 0, fx, fy)
    else:
        fx = px + u1
        fy = py + u2
        o, d = camera_ray(cam, width, height, px, py, u1, u2)
    ox, oy, oz = o
    dx, dy, dz = d

    lr = 0.0
    lg = 0.0
    lb = 0.0
    br = 1.0
    bg = 1.0
    bb = 1.0
    depth = 0
    nest = 0
    med = MEDIUM_NONE
    # Origin of the current segment's direction sample, for light-pdf
    # lookups; null crossings keep it (the direction is unchanged).
    vx = ox
    vy = oy
    vz = oz
    prev_pdf = 0.0
    prev_discrete = True
    null_budget = MAX_NULL_CROSSINGS

    while True:
        prim, t, uu, vv = scene_hit(sc, ox, oy, oz, dx, dy, dz, sc.t_eps, math.inf, stack)

        # Free flight against the channel-mean extinction of the active
        # medium; a vacuum draws nothing, keeping sample streams identical
        # to a medium-free run of the same scene.
        t_scat = math.inf
        sig_bar = 0.0
        st_r = 0.0
        st_g = 0.0
        st_b = 0.0
        if med >= 0:
            st_r, st_g, st_b = _extinction(sc, med)
            if st_r + st_g + st_b > 0.0:
                u, state, idx = draw1(mode, state, pss, idx)
                t_scat, sig_bar = sample_free_flight(st_r, st_g, st_b, u)

        t_surf = t if prim >= 0 else math.inf

        if t_scat < t_surf:
            # Medium scattering vertex.
            depth += 1
            pdf_t = sig_bar * math.exp(-sig_bar * t_scat)
            br *= sc.med_ss[med, 0] * math.exp(-st_r * t_scat) / pdf_t
            bg *= sc.med_ss[med, 1] * math.exp(-st_g * t_scat) / pdf_t
            bb *= sc.med_ss[med, 2] * math.exp(-st_b * t_scat) / pdf_t
            if depth >= max_depth or (br <= 0.0 and bg <= 0.0 and bb <= 0.0):
                break
            hx = ox + t_scat * dx
            hy = oy + t_scat * dy
            hz = oz + t_scat * dz

            # Next event estimation; the phase function is a continuum lobe,
            # so every listed emitter is a valid target.
            if n_tgt > 0:
                ue, state, idx = draw1(mode, state, pss, idx)
                ua, state, idx = draw1(mode, state, pss, idx)
                ub, state, idx = draw1(mode, state, pss, idx)
                e = nee_idx[min(int(ue * n_tgt), n_tgt - 1)]
                wi, ldist, le, pdf_e, e_delta = emitter_sample_direct(
                    sc.emit_kind, sc.emit_p, e, (hx, hy, hz), ua, ub
                )
                if pdf_e > 0.0 and (le[0] > 0.0 or le[1] > 0.0 or le[2] > 0.0):
                    tr_r, tr_g, tr_b = shadow_transmittance(
                        sc, hx, hy, hz, wi[0], wi[1], wi[2], ldist, med, stack
                    )
                    if tr_r > 0.0 or tr_g > 0.0 or tr_b > 0.0:
                        ph = phase_isotropic_eval()
                        pdf_l = pdf_e / n_tgt
                        if not mis_full or e_delta == 1:
                            wgt = 1.0
                        else:
                            wgt = pdf_l / (pdf_l + ph)
                        k = ph * wgt / pdf_l
                        lr += br * tr_r * le[0] * k
                        lg += bg * tr_g * le[1] * k
                        lb += bb * tr_b * le[2] * k

            up1, state, idx = draw1(mode, state, pss, idx)
            up2, state, idx = draw1(mode, state, pss, idx)
            ndx, ndy, ndz, ppdf = phase_isotropic_sample(up1, up2)
            # Isotropic phase: value/pdf = 1, throughput unchanged.
            vx = hx
            vy = hy
            vz = hz
            prev_pdf = ppdf
            prev_discrete = False
            ox = hx
            oy = hy
            oz = hz
            dx = ndx
            dy = ndy
            dz = ndz
        elif prim >= 0:
            if med >= 0 and sig_bar > 0.0:
                # Survived the medium to the surface: per-channel weight
                # against the mean-extinction survival probability.
                p_pass = math.exp(-sig_bar * t_surf)
                br *= math.exp(-st_r * t_surf) / p_pass
                bg *= math.exp(-st_g * t_surf) / p_pass
                bb *= math.exp(-st_b * t_surf) / p_pass
            hx = ox + t * dx
            hy = oy + t * dy
            hz = oz + t * dz
            m = sc.prim_material[prim]
            kind = sc.mat_kind[m]
            ng, ns = prim_normals(sc, prim, hx, hy, hz, uu, vv)
            d_dot_ng = dx * ng[0] + dy * ng[1] + dz * ng[2]

            e = sc.prim_emitter[prim]
            if e >= 0 and d_dot_ng < 0.0:
                # Front face of an area emitter. Emission is a property of
                # the hit, credited before the material decides anything.
                if prev_discrete or n_tgt == 0:
                    wgt = 1.0
                elif mis_full:
                    pdf_l = emitter_pdf_direct(
                        sc.emit_kind, sc.emit_p, e, (vx, vy, vz), (dx, dy, dz)
                    ) / n_tgt
                    wgt = prev_pdf / (prev_pdf + pdf_l)
                else:
                    wgt = 0.0
                if wgt > 0.0:
                    lr += br * sc.emit_p[e, 0] * wgt
                    lg += bg * sc.emit_p[e, 1] * wgt
                    lb += bb * sc.emit_p[e, 2] * wgt

            if kind == MAT_NULL:
                # Pass-through boundary: no vertex, no depth increment.
                if _has_interface(sc, prim):
                    med, nest = _cross_interface(sc, prim, d_dot_ng < 0.0, med, nest)
                    if nest > MEDIUM_STACK_LIMIT:
                        return lr, lg, lb, fx, fy, ERR_MEDIUM_NESTING
                ox = hx
                oy = hy
                oz = hz
                null_budget -= 1
                if null_budget <= 0:
                    break
                continue

            depth += 1
            if depth >= max_depth:
                break

            tan, bit = make_frame(ns)
            wo = to_local(tan, bit, ns, (-dx, -dy, -dz))

            if n_tgt > 0 and not _delta_only_material(sc, m):
                ue, state, idx = draw1(mode, state, pss, idx)
                ua, state, idx = draw1(mode, state, pss, idx)
                ub, state, idx = draw1(mode, state, pss, idx)
                e2 = nee_idx[min(int(ue * n_tgt), n_tgt - 1)]
                wi, ldist, le, pdf_e, e_delta = emitter_sample_direct(
                    sc.emit_kind, sc.emit_p, e2, (hx, hy, hz), ua, ub
                )
                if pdf_e > 0.0 and (le[0] > 0.0 or le[1] > 0.0 or le[2] > 0.0):
                    wil = to_local(tan, bit, ns, wi)
                    fr, fg, fb, pdf_b = bsdf_eval(sc.mat_kind, sc.mat_p, m, wo, wil, True)
                    wi_dot_ng = wi[0] * ng[0] + wi[1] * ng[1] + wi[2] * ng[2]
                    if (fr > 0.0 or fg > 0.0 or fb > 0.0) and wi_dot_ng * wil[2] > 0.0:
                        # Shadow rays that continue past this boundary start
                        # in the medium on their side of it.
                        smed = med
                        if wi_dot_ng * d_dot_ng > 0.0 and _has_interface(sc, prim):
                            smed, _n2 = _cross_interface(sc, prim, wi_dot_ng < 0.0, med, 0)
                        tr_r, tr_g, tr_b = shadow_transmittance(
                            sc, hx, hy, hz, wi[0], wi[1], wi[2], ldist, smed, stack
                        )
                        if tr_r > 0.0 or tr_g > 0.0 or tr_b > 0.0:
                            pdf_l = pdf_e / n_tgt
                            if not mis_full or e_delta == 1:
                                wgt = 1.0
                            else:
                                wgt = pdf_l / (pdf_l + pdf_b)
                            k = abs(wil[2]) * wgt / pdf_l
                            lr += br * fr * tr_r * le[0] * k
                            lg += bg * fg * tr_g * le[1] * k
                            lb += bb * fb * tr_b * le[2] * k

            ub1, state, idx = draw1(mode, state, pss, idx)
            ub2, state, idx = draw1(mode, state, pss, idx)
            ub3, state, idx = draw1(mode, state, pss, idx)
            wil, val, pdf_b, flags = bsdf_sample(
                sc.mat_kind, sc.mat_p, m, wo, ub1, ub2, ub3, True
            )
            if pdf_b <= 0.0:
                break
            wiw = to_world(tan, bit, ns, wil)
            wi_dot_ng = wiw[0] * ng[0] + wiw[1] * ng[1] + wiw[2] * ng[2]
            # Shading and geometric classifications must agree, or the ray
            # would tunnel through the surface it scattered from.
            if (wi_dot_ng > 0.0) != (wil[2] > 0.0):
                break
            cos_i = abs(wil[2])
            br *= val[0] * cos_i / pdf_b
            bg *= val[1] * cos_i / pdf_b
            bb *= val[2] * cos_i / pdf_b
            if br <= 0.0 and bg <= 0.0 and bb <= 0.0:
                break
            if wi_dot_ng * d_dot_ng > 0.0 and _has_interface(sc, prim):
                med, nest = _cross_interface(sc, prim, wi_dot_ng < 0.0, med, nest)
                if nest > MEDIUM_STACK_LIMIT:
                    return lr, lg, lb, fx, fy, ERR_MEDIUM_NESTING
            prev_discrete = (flags & SAMPLE_DELTA) != 0
            prev_pdf = 0.0 if prev_discrete else pdf_b
            vx = hx
            vy = hy
            vz = hz
            ox = hx
            oy = hy
            oz = hz
            dx = wiw[0]
            dy = wiw[1]
            dz = wiw[2]
        else:
            # Escaped: the segment completes at the environment, which the
            # loop invariant (depth < max_depth here) always permits.  With
            # full MIS the environment is the BSDF/phase strategy's exclusive
            # target, so the credit is unweighted.
            if mis_full or prev_discrete:
                er, eg, eb = emitter_eval_env(
                    sc.emit_kind, sc.emit_p, sc.emit_kind.shape[0]
                )
                lr += br * er
                lg += bg * eg
                lb += bb * eb
            break

        if depth >= rr_start:
            q = br
            if bg > q:
                q = bg
            if bb > q:
                q = bb
            q = min(max(q, 0.05), 1.0)
            u, state, idx = draw1(mode, state, pss, idx)
            if u >= q:
                break
            br /= q
            bg /= q
            bb /= q

    return lr, lg, lb, fx, fy, ERR_NONE


@njit(cache=True)
def render_frame(sc, cam, width, height, seed, s0, s1, max_depth, rr_start,
                 mis_full, nee_idx, film_sum, film_weight):
    """Accumulate samples s0 <= s < s1 of every pixel into the film arrays.

    Sample streams are keyed (seed, pixel index, sample index), so any batch
    split over s yields the same image.  Returns (rejected, err): rejected
    counts dropped samples (non-finite or invalid), err latches the last
    kernel error code.
    """
    stack = np.zeros(STACK_DEPTH, dtype=np.int64)
    pss = np.zeros(0, dtype=np.float64)
    rejected = 0
    err = ERR_NONE
    for py in range(height):
        for px in range(width):
            pix = py * width + px
            for s in range(s0, s1):
                state = stream_init(seed, pix, s, 0)
                r, g, b, fx, fy, e = trace_path(
                    sc, cam, width, height, px, py, MODE_STREAM, state, pss,
                    max_depth, rr_start, mis_full, nee_idx, stack
                )
                if e != ERR_NONE:
                    err = e
                    rejected += 1
                    continue
                if not (math.isfinite(r) and math.isfinite(g) and math.isfinite(b)):
                    rejected += 1
                    continue
                film_sum[py, px, 0] += r
                film_sum[py, px, 1] += g
                film_sum[py, px, 2] += b
                film_weight[py, px] += 1.0
    return rejected, err


def nee_target_indices(emit_kind: np.ndarray, mis_full: bool) -> np.ndarray:
    """Emitter indices next event estimation may target, per MIS mode."""
    if mis_full:
        return np.nonzero(emit_kind != EMIT_ENV)[0].astype(np.int64)
    return np.arange(emit_kind.shape[0], dtype=np.int64)
