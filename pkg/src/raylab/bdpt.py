"""Bidirectional path tracing over surface vertices.

Each sample builds a camera subpath and a light subpath, then connects
every surface endpoint pair (s light vertices, t camera vertices) whose
combined segment count fits the depth limit.  Contributions are weighted
with the balance heuristic over the area-measure densities with which
every other (s, t) split could have produced the same path; delta lobes
carry a flag instead of a density and block the splits that would have
to sample them.  Light subpaths start from area emitters only, and
constant environments contribute through escaping camera walks alone,
mirroring the unidirectional tracer where the environment is the
exclusive target of the scattering strategy; both integrators therefore
estimate the same image.

Connections attenuate by analytic transmittance, so absorbing media are
supported; scattering media and subsurface materials are refused up
front because medium vertices are not connection endpoints here.

t = 1 strategies connect a light vertex straight to the camera and splat
onto whatever pixel the projection lands in.  Splats are normalized by
the per-pixel sample count, which is exact as long as no samples were
rejected (the rejected counter in the result makes that visible).
"""

from __future__ import annotations

import math
import time

import numpy as np
from numba import njit

from .bsdf import MAT_NULL, SAMPLE_DELTA, bsdf_eval, bsdf_sample
from .bvh import STACK_DEPTH
from .emitters import (
    EMIT_AREA,
    emitter_eval_env,
    emitter_pdf_emission,
    emitter_sample_emission,
)
from .errors import MediumNestingError
from .media import MEDIUM_NONE, MEDIUM_STACK_LIMIT
from .pathkernel import (
    ERR_MEDIUM_NESTING,
    ERR_NONE,
    MAX_NULL_CROSSINGS,
    _cross_interface,
    _delta_only_material,
    _has_interface,
    shadow_transmittance,
)
from .rng import rng_next, stream_init
from .scene import camera_ray
from .scenedata import prim_normals, scene_hit
from .vecmath import make_frame, to_local


@njit(cache=True, inline="always")
def _remap0(x):
    return x if x != 0.0 else 1.0


@njit(cache=True)
def mis_weight(zpf, zpr, zdelta, ypf, ypr, ydelta, s, t,
               pt_rev, ptm_rev, qs_rev, qsm_rev):
    """Balance-heuristic weight of split (s, t) for one concrete path.

    zpf/zpr and ypf/ypr hold the stored area densities of the camera and
    light prefixes; the four *_rev arguments replace the reverse
    densities adjacent to the connection, which depend on the split.
    Zero densities mark delta-sampled segments and cancel out of the
    ratios; the delta flags block the splits a delta lobe forbids.
    """
    if s + t == 2:
        return 1.0
    sum_ri = 0.0

    ri = 1.0
    i = t - 1
    while i > 0:
        if i == t - 1:
            num = pt_rev
        elif i == t - 2:
            num = ptm_rev
        else:
            num = zpr[i]
        ri *= _remap0(num) / _remap0(zpf[i])
        d_here = False if i == t - 1 else zdelta[i] != 0
        if (not d_here) and zdelta[i - 1] == 0:
            sum_ri += ri
        i -= 1

    ri = 1.0
    i = s - 1
    while i >= 0:
        if i == s - 1:
            num = qs_rev
        elif i == s - 2:
            num = qsm_rev
        else:
            num = ypr[i]
        ri *= _remap0(num) / _remap0(ypf[i])
        d_here = False if i == s - 1 else ydelta[i] != 0
        d_prev = ydelta[i - 1] != 0 if i > 0 else False
        if (not d_here) and (not d_prev):
            sum_ri += ri
        i -= 1

    return 1.0 / (1.0 + sum_ri)


@njit(cache=True, inline="always")
def _to_area(pdf_dir, ax, ay, az, bx, by, bz, bngx, bngy, bngz):
    """Convert a solid-angle density at a into an area density at b."""
    dx = bx - ax
    dy = by - ay
    dz = bz - az
    d2 = dx * dx + dy * dy + dz * dz
    if d2 <= 0.0:
        return 0.0
    inv = 1.0 / math.sqrt(d2)
    cosb = abs((dx * bngx + dy * bngy + dz * bngz) * inv)
    return pdf_dir * cosb / d2


@njit(cache=True)
def _vertex_pdf(sc, vp, vns, vmat, i, fx, fy, fz, tx, ty, tz, radiance_mode):
    """Solid-angle density of vertex i scattering from point f toward t."""
    nsv = (vns[i, 0], vns[i, 1], vns[i, 2])
    tan, bit = make_frame(nsv)
    wox = fx - vp[i, 0]
    woy = fy - vp[i, 1]
    woz = fz - vp[i, 2]
    inv = 1.0 / math.sqrt(wox * wox + woy * woy + woz * woz)
    wo = to_local(tan, bit, nsv, (wox * inv, woy * inv, woz * inv))
    wix = tx - vp[i, 0]
    wiy = ty - vp[i, 1]
    wiz = tz - vp[i, 2]
    inv = 1.0 / math.sqrt(wix * wix + wiy * wiy + wiz * wiz)
    wi = to_local(tan, bit, nsv, (wix * inv, wiy * inv, wiz * inv))
    _, _, _, pdf = bsdf_eval(sc.mat_kind, sc.mat_p, vmat[i], wo, wi, radiance_mode)
    return pdf


@njit(cache=True, inline="always")
def _cam_pdf_dir(cam, dx, dy, dz):
    """Density over solid angle with which the camera emits ray direction d."""
    cosf = dx * cam[9] + dy * cam[10] + dz * cam[11]
    if cosf <= 1e-9:
        return 0.0
    area = 4.0 * cam[12] * cam[13]
    return 1.0 / (area * cosf * cosf * cosf)


@njit(cache=True, inline="always")
def _cam_project(cam, width, height, dx, dy, dz):
    """Film coordinates hit by unit direction d from the camera, if any."""
    cosf = dx * cam[9] + dy * cam[10] + dz * cam[11]
    if cosf <= 1e-9:
        return -1.0, -1.0, 0.0, False
    sx = (dx * cam[3] + dy * cam[4] + dz * cam[5]) / cosf
    sy = (dx * cam[6] + dy * cam[7] + dz * cam[8]) / cosf
    fx = (sx / cam[12] + 1.0) * 0.5 * width
    fy = (1.0 - sy / cam[13]) * 0.5 * height
    ok = fx >= 0.0 and fx < width and fy >= 0.0 and fy < height
    return fx, fy, cosf, ok


@njit(cache=True)
def _subpath_walk(sc, ox, oy, oz, dx, dy, dz, br, bg, bb, pdf_dir0, med0,
                  radiance_mode, credit_env, state, max_verts, rr_start, stack,
                  vp, vng, vns, vbeta, vpf, vpr, vdelta, vmat, vemit,
                  vmpos, vmneg):
    """Extend a subpath whose vertex 0 the caller filled in.

    Walks the ray through null boundaries and absorbing media, appending
    one vertex per real surface hit with its throughput, forward area
    density, and (one bounce later) the reverse density of its
    predecessor.  Returns (vertex count, escaped env credit rgb, err);
    the env credit is nonzero only for camera walks that escape into a
    constant environment.
    """
    n = 1
    med = med0
    nest = 0
    null_budget = MAX_NULL_CROSSINGS
    pdf_dir = pdf_dir0
    esc_r = 0.0
    esc_g = 0.0
    esc_b = 0.0
    while n < max_verts:
        prim, t, uu, vv = scene_hit(sc, ox, oy, oz, dx, dy, dz, sc.t_eps, math.inf, stack)
        if prim < 0:
            if credit_env:
                er, eg, eb = emitter_eval_env(sc.emit_kind, sc.emit_p, sc.emit_kind.shape[0])
                esc_r = br * er
                esc_g = bg * eg
                esc_b = bb * eb
            return n, esc_r, esc_g, esc_b, ERR_NONE
        if med >= 0:
            st_r = sc.med_sa[med, 0] + sc.med_ss[med, 0]
            st_g = sc.med_sa[med, 1] + sc.med_ss[med, 1]
            st_b = sc.med_sa[med, 2] + sc.med_ss[med, 2]
            br *= math.exp(-st_r * t)
            bg *= math.exp(-st_g * t)
            bb *= math.exp(-st_b * t)
        hx = ox + t * dx
        hy = oy + t * dy
        hz = oz + t * dz
        m = sc.prim_material[prim]
        ng, ns = prim_normals(sc, prim, hx, hy, hz, uu, vv)
        d_dot_ng = dx * ng[0] + dy * ng[1] + dz * ng[2]

        if sc.mat_kind[m] == MAT_NULL:
            if _has_interface(sc, prim):
                med, nest = _cross_interface(sc, prim, d_dot_ng < 0.0, med, nest)
                if nest > MEDIUM_STACK_LIMIT:
                    return n, 0.0, 0.0, 0.0, ERR_MEDIUM_NESTING
            ox = hx
            oy = hy
            oz = hz
            null_budget -= 1
            if null_budget <= 0:
                return n, 0.0, 0.0, 0.0, ERR_NONE
            continue

        # Distance to the previous real vertex (collinear through nulls).
        sx = hx - vp[n - 1, 0]
        sy = hy - vp[n - 1, 1]
        sz = hz - vp[n - 1, 2]
        d2 = sx * sx + sy * sy + sz * sz
        if d2 <= 0.0:
            return n, 0.0, 0.0, 0.0, ERR_NONE
        cos_here = abs(d_dot_ng)

        vp[n, 0] = hx
        vp[n, 1] = hy
        vp[n, 2] = hz
        vng[n, 0] = ng[0]
        vng[n, 1] = ng[1]
        vng[n, 2] = ng[2]
        vns[n, 0] = ns[0]
        vns[n, 1] = ns[1]
        vns[n, 2] = ns[2]
        vbeta[n, 0] = br
        vbeta[n, 1] = bg
        vbeta[n, 2] = bb
        vpf[n] = pdf_dir * cos_here / d2
        vpr[n] = 0.0
        vdelta[n] = 1 if _delta_only_material(sc, m) else 0
        vmat[n] = m
        vemit[n] = sc.prim_emitter[prim]
        if _has_interface(sc, prim):
            vmpos[n] = sc.prim_exterior[prim]
            vmneg[n] = sc.prim_interior[prim]
        else:
            vmpos[n] = med
            vmneg[n] = med
        n += 1
        if n >= max_verts:
            return n, 0.0, 0.0, 0.0, ERR_NONE

        tan, bit = make_frame(ns)
        wo = to_local(tan, bit, ns, (-dx, -dy, -dz))
        u1, state = rng_next(state)
        u2, state = rng_next(state)
        u3, state = rng_next(state)
        wil, val, pdf_b, flags = bsdf_sample(
            sc.mat_kind, sc.mat_p, m, wo, u1, u2, u3, radiance_mode
        )
        if pdf_b <= 0.0:
            return n, 0.0, 0.0, 0.0, ERR_NONE
        wx = tan[0] * wil[0] + bit[0] * wil[1] + ns[0] * wil[2]
        wy = tan[1] * wil[0] + bit[1] * wil[1] + ns[1] * wil[2]
        wz = tan[2] * wil[0] + bit[2] * wil[1] + ns[2] * wil[2]
        wi_dot_ng = wx * ng[0] + wy * ng[1] + wz * ng[2]
        if (wi_dot_ng > 0.0) != (wil[2] > 0.0):
            return n, 0.0, 0.0, 0.0, ERR_NONE

        cos_i = abs(wil[2])
        nbr = br * val[0] * cos_i / pdf_b
        nbg = bg * val[1] * cos_i / pdf_b
        nbb = bb * val[2] * cos_i / pdf_b
        if not radiance_mode:
            # Importance transport across a shading normal needs the
            # classic correction so both walk directions agree.
            wo_ns = abs(wo[2])
            wo_ng = abs(dx * ng[0] + dy * ng[1] + dz * ng[2])
            wi_ns = abs(wil[2])
            wi_ng = abs(wi_dot_ng)
            if wo_ng * wi_ns > 0.0:
                corr = (wo_ns * wi_ng) / (wo_ng * wi_ns)
                nbr *= corr
                nbg *= corr
                nbb *= corr
        if nbr <= 0.0 and nbg <= 0.0 and nbb <= 0.0:
            return n, 0.0, 0.0, 0.0, ERR_NONE

        is_delta = (flags & SAMPLE_DELTA) != 0
        # Reverse density of the predecessor, seen from this vertex.
        if is_delta:
            pdf_dir = 0.0
            rev_dir = 0.0
        else:
            pdf_dir = pdf_b
            _, _, _, rev_dir = bsdf_eval(sc.mat_kind, sc.mat_p, m, wil, wo, radiance_mode)
        cos_prev = abs(dx * vng[n - 2, 0] + dy * vng[n - 2, 1] + dz * vng[n - 2, 2])
        vpr[n - 2] = rev_dir * cos_prev / d2
        if is_delta:
            vpf[n - 1] = 0.0
            vdelta[n - 1] = 1

        if n - 1 >= rr_start:
            q = nbr
            if nbg > q:
                q = nbg
            if nbb > q:
                q = nbb
            if q > 1.0:
                q = 1.0
            elif q < 0.05:
                q = 0.05
            ur, state = rng_next(state)
            if ur >= q:
                return n, 0.0, 0.0, 0.0, ERR_NONE
            nbr /= q
            nbg /= q
            nbb /= q

        if wi_dot_ng * d_dot_ng > 0.0 and _has_interface(sc, prim):
            med, nest = _cross_interface(sc, prim, wi_dot_ng < 0.0, med, nest)
            if nest > MEDIUM_STACK_LIMIT:
                return n, 0.0, 0.0, 0.0, ERR_MEDIUM_NESTING

        br = nbr
        bg = nbg
        bb = nbb
        ox = hx
        oy = hy
        oz = hz
        dx = wx
        dy = wy
        dz = wz


@njit(cache=True)
def _connection_f(sc, vp, vng, vns, vmat, i, fx, fy, fz, tx, ty, tz, radiance_mode):
    """BSDF value (no cosine) at vertex i from point f toward point t,
    with the geometric sidedness guard; returns (r, g, b, cos_i)."""
    nsv = (vns[i, 0], vns[i, 1], vns[i, 2])
    tan, bit = make_frame(nsv)
    wox = fx - vp[i, 0]
    woy = fy - vp[i, 1]
    woz = fz - vp[i, 2]
    inv = 1.0 / math.sqrt(wox * wox + woy * woy + woz * woz)
    wo = to_local(tan, bit, nsv, (wox * inv, woy * inv, woz * inv))
    wix = tx - vp[i, 0]
    wiy = ty - vp[i, 1]
    wiz = tz - vp[i, 2]
    inv = 1.0 / math.sqrt(wix * wix + wiy * wiy + wiz * wiz)
    wiw = (wix * inv, wiy * inv, wiz * inv)
    wi = to_local(tan, bit, nsv, wiw)
    wi_dot_ng = wiw[0] * vng[i, 0] + wiw[1] * vng[i, 1] + wiw[2] * vng[i, 2]
    if wi_dot_ng * wi[2] <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    fr, fg, fb, _ = bsdf_eval(sc.mat_kind, sc.mat_p, vmat[i], wo, wi, radiance_mode)
    return fr, fg, fb, abs(wi[2])


@njit(cache=True)
def render_bdpt_frame(sc, cam, width, height, seed, s0, s1, max_depth, rr_start,
                      light_idx, film_sum, film_weight, splat_sum):
    """Accumulate samples s0 <= s < s1 of every pixel; t = 1 strategies go
    into splat_sum.  Returns (rejected, err)."""
    stack = np.zeros(STACK_DEPTH, dtype=np.int64)
    cap_t = max_depth + 1  # camera vertices incl. z0
    cap_s = max_depth      # light vertices incl. y0
    zp = np.zeros((cap_t, 3))
    zng = np.zeros((cap_t, 3))
    zns = np.zeros((cap_t, 3))
    zbeta = np.zeros((cap_t, 3))
    zpf = np.zeros(cap_t)
    zpr = np.zeros(cap_t)
    zdelta = np.zeros(cap_t, dtype=np.uint8)
    zmat = np.full(cap_t, -1, dtype=np.int64)
    zemit = np.full(cap_t, -1, dtype=np.int64)
    zmpos = np.full(cap_t, MEDIUM_NONE, dtype=np.int64)
    zmneg = np.full(cap_t, MEDIUM_NONE, dtype=np.int64)
    yp = np.zeros((cap_s, 3))
    yng = np.zeros((cap_s, 3))
    yns = np.zeros((cap_s, 3))
    ybeta = np.zeros((cap_s, 3))
    ypf = np.zeros(cap_s)
    ypr = np.zeros(cap_s)
    ydelta = np.zeros(cap_s, dtype=np.uint8)
    ymat = np.full(cap_s, -1, dtype=np.int64)
    yemit = np.full(cap_s, -1, dtype=np.int64)
    ympos = np.full(cap_s, MEDIUM_NONE, dtype=np.int64)
    ymneg = np.full(cap_s, MEDIUM_NONE, dtype=np.int64)
    n_area = light_idx.shape[0]
    cam_area = 4.0 * cam[12] * cam[13]
    rejected = 0
    err = ERR_NONE

    for py in range(height):
        for px in range(width):
            pix = py * width + px
            for smp in range(s0, s1):
                # Camera subpath.
                state = stream_init(seed, pix, smp, 0)
                u1, state = rng_next(state)
                u2, state = rng_next(state)
                o, d = camera_ray(cam, width, height, float(px), float(py), u1, u2)
                zp[0, 0] = o[0]
                zp[0, 1] = o[1]
                zp[0, 2] = o[2]
                zng[0, 0] = cam[9]
                zng[0, 1] = cam[10]
                zng[0, 2] = cam[11]
                zns[0] = zng[0]
                zbeta[0, 0] = 1.0
                zbeta[0, 1] = 1.0
                zbeta[0, 2] = 1.0
                zpf[0] = 1.0
                zpr[0] = 0.0
                zdelta[0] = 0
                pdf_cam = _cam_pdf_dir(cam, d[0], d[1], d[2])
                nz, esc_r, esc_g, esc_b, e1 = _subpath_walk(
                    sc, o[0], o[1], o[2], d[0], d[1], d[2], 1.0, 1.0, 1.0,
                    pdf_cam, MEDIUM_NONE, True, True, state, cap_t, rr_start,
                    stack, zp, zng, zns, zbeta, zpf, zpr, zdelta, zmat, zemit,
                    zmpos, zmneg,
                )
                if e1 != ERR_NONE:
                    err = e1
                    rejected += 1
                    continue
                lr = esc_r
                lg = esc_g
                lb = esc_b

                # Light subpath.
                ny = 0
                if n_area > 0:
                    state = stream_init(seed, pix, smp, 1)
                    ue, state = rng_next(state)
                    ua, state = rng_next(state)
                    ub, state = rng_next(state)
                    uc, state = rng_next(state)
                    ud, state = rng_next(state)
                    e = light_idx[min(int(ue * n_area), n_area - 1)]
                    lo, ld, ln, lval, pdf_pos, pdf_dir, _ = emitter_sample_emission(
                        sc.emit_kind, sc.emit_p, e, ua, ub, uc, ud
                    )
                    choice = 1.0 / n_area
                    yp[0, 0] = lo[0]
                    yp[0, 1] = lo[1]
                    yp[0, 2] = lo[2]
                    yng[0, 0] = ln[0]
                    yng[0, 1] = ln[1]
                    yng[0, 2] = ln[2]
                    yns[0] = yng[0]
                    ybeta[0, 0] = lval[0] / (pdf_pos * choice)
                    ybeta[0, 1] = lval[1] / (pdf_pos * choice)
                    ybeta[0, 2] = lval[2] / (pdf_pos * choice)
                    ypf[0] = pdf_pos * choice
                    ypr[0] = 0.0
                    ydelta[0] = 0
                    ymat[0] = -1
                    yemit[0] = e
                    ny = 1
                    cos0 = ld[0] * ln[0] + ld[1] * ln[1] + ld[2] * ln[2]
                    if pdf_dir > 0.0 and cos0 > 0.0:
                        b1r = ybeta[0, 0] * cos0 / pdf_dir
                        b1g = ybeta[0, 1] * cos0 / pdf_dir
                        b1b = ybeta[0, 2] * cos0 / pdf_dir
                        ny, _, _, _, e2 = _subpath_walk(
                            sc, lo[0], lo[1], lo[2], ld[0], ld[1], ld[2],
                            b1r, b1g, b1b, pdf_dir, MEDIUM_NONE, False, False,
                            state, cap_s, rr_start, stack, yp, yng, yns,
                            ybeta, ypf, ypr, ydelta, ymat, yemit, ympos, ymneg,
                        )
                        if e2 != ERR_NONE:
                            err = e2
                            rejected += 1
                            continue

                # s = 0: camera walk lands on an emitter.
                for t in range(2, nz + 1):
                    e = zemit[t - 1]
                    if e < 0:
                        continue
                    bx = zp[t - 2, 0] - zp[t - 1, 0]
                    by = zp[t - 2, 1] - zp[t - 1, 1]
                    bz = zp[t - 2, 2] - zp[t - 1, 2]
                    if bx * zng[t - 1, 0] + by * zng[t - 1, 1] + bz * zng[t - 1, 2] <= 0.0:
                        continue
                    pdf_pos0, _ = emitter_pdf_emission(
                        sc.emit_kind, sc.emit_p, e,
                        (zng[t - 1, 0], zng[t - 1, 1], zng[t - 1, 2]),
                        (0.0, 0.0, 0.0),
                    )
                    pt_rev = pdf_pos0 * (1.0 / n_area) if n_area > 0 else 0.0
                    inv = 1.0 / math.sqrt(bx * bx + by * by + bz * bz)
                    _, pdf_dl = emitter_pdf_emission(
                        sc.emit_kind, sc.emit_p, e,
                        (zng[t - 1, 0], zng[t - 1, 1], zng[t - 1, 2]),
                        (bx * inv, by * inv, bz * inv),
                    )
                    ptm_rev = _to_area(
                        pdf_dl, zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                        zp[t - 2, 0], zp[t - 2, 1], zp[t - 2, 2],
                        zng[t - 2, 0], zng[t - 2, 1], zng[t - 2, 2],
                    )
                    w = mis_weight(zpf, zpr, zdelta, ypf, ypr, ydelta, 0, t,
                                   pt_rev, ptm_rev, 0.0, 0.0)
                    lr += zbeta[t - 1, 0] * sc.emit_p[e, 0] * w
                    lg += zbeta[t - 1, 1] * sc.emit_p[e, 1] * w
                    lb += zbeta[t - 1, 2] * sc.emit_p[e, 2] * w

                # Surface-to-surface connections, s >= 1 and t >= 2.
                for t in range(2, nz + 1):
                    if zdelta[t - 1] != 0:
                        continue
                    s_max = max_depth + 1 - t
                    if s_max > ny:
                        s_max = ny
                    for s in range(1, s_max + 1):
                        if s >= 2 and ydelta[s - 1] != 0:
                            continue
                        cx = yp[s - 1, 0] - zp[t - 1, 0]
                        cy = yp[s - 1, 1] - zp[t - 1, 1]
                        cz = yp[s - 1, 2] - zp[t - 1, 2]
                        d2 = cx * cx + cy * cy + cz * cz
                        if d2 <= 1e-18:
                            continue
                        dist = math.sqrt(d2)
                        ux = cx / dist
                        uy = cy / dist
                        uz = cz / dist
                        fzr, fzg, fzb, cos_z = _connection_f(
                            sc, zp, zng, zns, zmat, t - 1,
                            zp[t - 2, 0], zp[t - 2, 1], zp[t - 2, 2],
                            yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2], True,
                        )
                        if fzr <= 0.0 and fzg <= 0.0 and fzb <= 0.0:
                            continue
                        if s == 1:
                            # Emitting side: front face of the light.
                            cos_l = -(ux * yng[0, 0] + uy * yng[0, 1] + uz * yng[0, 2])
                            if cos_l <= 0.0:
                                continue
                            cr = ybeta[0, 0]
                            cg = ybeta[0, 1]
                            cb = ybeta[0, 2]
                            fy_cos = cos_l
                        else:
                            fyr, fyg, fyb, cos_y = _connection_f(
                                sc, yp, yng, yns, ymat, s - 1,
                                yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2],
                                zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2], False,
                            )
                            if fyr <= 0.0 and fyg <= 0.0 and fyb <= 0.0:
                                continue
                            cr = ybeta[s - 1, 0] * fyr
                            cg = ybeta[s - 1, 1] * fyg
                            cb = ybeta[s - 1, 2] * fyb
                            fy_cos = cos_y
                        geom = cos_z * fy_cos / d2
                        cr *= zbeta[t - 1, 0] * fzr * geom
                        cg *= zbeta[t - 1, 1] * fzg * geom
                        cb *= zbeta[t - 1, 2] * fzb * geom
                        if cr <= 0.0 and cg <= 0.0 and cb <= 0.0:
                            continue
                        smed = zmpos[t - 1] if (
                            ux * zng[t - 1, 0] + uy * zng[t - 1, 1] + uz * zng[t - 1, 2]
                        ) > 0.0 else zmneg[t - 1]
                        tr_r, tr_g, tr_b = shadow_transmittance(
                            sc, zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                            ux, uy, uz, dist, smed, stack,
                        )
                        if tr_r <= 0.0 and tr_g <= 0.0 and tr_b <= 0.0:
                            continue
                        # Split-dependent reverse densities at the junction.
                        if s == 1:
                            _, pdf_dl = emitter_pdf_emission(
                                sc.emit_kind, sc.emit_p, yemit[0],
                                (yng[0, 0], yng[0, 1], yng[0, 2]),
                                (-ux, -uy, -uz),
                            )
                            pt_rev = _to_area(
                                pdf_dl, yp[0, 0], yp[0, 1], yp[0, 2],
                                zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                                zng[t - 1, 0], zng[t - 1, 1], zng[t - 1, 2],
                            )
                            qsm_rev = 0.0
                        else:
                            pdf_qs = _vertex_pdf(
                                sc, yp, yns, ymat, s - 1,
                                yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2],
                                zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2], False,
                            )
                            pt_rev = _to_area(
                                pdf_qs, yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                                zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                                zng[t - 1, 0], zng[t - 1, 1], zng[t - 1, 2],
                            )
                            pdf_qs2 = _vertex_pdf(
                                sc, yp, yns, ymat, s - 1,
                                zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                                yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2], False,
                            )
                            qsm_rev = _to_area(
                                pdf_qs2, yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                                yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2],
                                yng[s - 2, 0], yng[s - 2, 1], yng[s - 2, 2],
                            )
                        pdf_pt = _vertex_pdf(
                            sc, zp, zns, zmat, t - 1,
                            zp[t - 2, 0], zp[t - 2, 1], zp[t - 2, 2],
                            yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2], True,
                        )
                        qs_rev = _to_area(
                            pdf_pt, zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                            yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                            yng[s - 1, 0], yng[s - 1, 1], yng[s - 1, 2],
                        )
                        pdf_pt2 = _vertex_pdf(
                            sc, zp, zns, zmat, t - 1,
                            yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                            zp[t - 2, 0], zp[t - 2, 1], zp[t - 2, 2], True,
                        )
                        ptm_rev = _to_area(
                            pdf_pt2, zp[t - 1, 0], zp[t - 1, 1], zp[t - 1, 2],
                            zp[t - 2, 0], zp[t - 2, 1], zp[t - 2, 2],
                            zng[t - 2, 0], zng[t - 2, 1], zng[t - 2, 2],
                        )
                        w = mis_weight(zpf, zpr, zdelta, ypf, ypr, ydelta,
                                       s, t, pt_rev, ptm_rev, qs_rev, qsm_rev)
                        lr += cr * tr_r * w
                        lg += cg * tr_g * w
                        lb += cb * tr_b * w

                # t = 1: connect light vertices straight to the camera.
                s_max = max_depth if max_depth < ny else ny
                for s in range(2, s_max + 1):
                    if ydelta[s - 1] != 0:
                        continue
                    wx = yp[s - 1, 0] - cam[0]
                    wy = yp[s - 1, 1] - cam[1]
                    wz = yp[s - 1, 2] - cam[2]
                    d2 = wx * wx + wy * wy + wz * wz
                    if d2 <= 1e-18:
                        continue
                    dist = math.sqrt(d2)
                    wx /= dist
                    wy /= dist
                    wz /= dist
                    fx, fy, cosf, ok = _cam_project(cam, width, height, wx, wy, wz)
                    if not ok:
                        continue
                    fyr, fyg, fyb, cos_y = _connection_f(
                        sc, yp, yng, yns, ymat, s - 1,
                        yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2],
                        cam[0], cam[1], cam[2], False,
                    )
                    if fyr <= 0.0 and fyg <= 0.0 and fyb <= 0.0:
                        continue
                    tr_r, tr_g, tr_b = shadow_transmittance(
                        sc, cam[0], cam[1], cam[2], wx, wy, wz, dist,
                        MEDIUM_NONE, stack,
                    )
                    if tr_r <= 0.0 and tr_g <= 0.0 and tr_b <= 0.0:
                        continue
                    k = cos_y / (cam_area * cosf * cosf * cosf * d2)
                    cr = ybeta[s - 1, 0] * fyr * tr_r * k
                    cg = ybeta[s - 1, 1] * fyg * tr_g * k
                    cb = ybeta[s - 1, 2] * fyb * tr_b * k
                    if cr <= 0.0 and cg <= 0.0 and cb <= 0.0:
                        continue
                    pdf_cam2 = _cam_pdf_dir(cam, wx, wy, wz)
                    qs_rev = _to_area(
                        pdf_cam2, cam[0], cam[1], cam[2],
                        yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                        yng[s - 1, 0], yng[s - 1, 1], yng[s - 1, 2],
                    )
                    pdf_qs = _vertex_pdf(
                        sc, yp, yns, ymat, s - 1,
                        cam[0], cam[1], cam[2],
                        yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2], False,
                    )
                    qsm_rev = _to_area(
                        pdf_qs, yp[s - 1, 0], yp[s - 1, 1], yp[s - 1, 2],
                        yp[s - 2, 0], yp[s - 2, 1], yp[s - 2, 2],
                        yng[s - 2, 0], yng[s - 2, 1], yng[s - 2, 2],
                    )
                    w = mis_weight(zpf, zpr, zdelta, ypf, ypr, ydelta,
                                   s, 1, 0.0, 0.0, qs_rev, qsm_rev)
                    sr = cr * w
                    sg = cg * w
                    sb = cb * w
                    if math.isfinite(sr) and math.isfinite(sg) and math.isfinite(sb):
                        ix = int(fx)
                        iy = int(fy)
                        if ix >= width:
                            ix = width - 1
                        if iy >= height:
                            iy = height - 1
                        splat_sum[iy, ix, 0] += sr
                        splat_sum[iy, ix, 1] += sg
                        splat_sum[iy, ix, 2] += sb
                    else:
                        rejected += 1

                if math.isfinite(lr) and math.isfinite(lg) and math.isfinite(lb):
                    film_sum[py, px, 0] += lr
                    film_sum[py, px, 1] += lg
                    film_sum[py, px, 2] += lb
                    film_weight[py, px] += 1.0
                else:
                    rejected += 1
    return rejected, err


def area_light_indices(emit_kind: np.ndarray) -> np.ndarray:
    """Emitter indices a light subpath may start from."""
    return np.nonzero(emit_kind == EMIT_AREA)[0].astype(np.int64)


def render_bdpt(scene, spp=None, budget_seconds=None, seed=None, max_batches=None):
    """Render with bidirectional path tracing; see render_image for the
    shared budget and replay semantics."""
    from .integrators import (
        RenderResult,
        _resolve_budget,
        _run_batches,
        as_scene_data,
        check_capability,
    )
    from .scene import Film

    data = as_scene_data(scene)
    check_capability("bdpt", data)
    desc = data.desc
    cfg = desc.integrator
    if seed is None:
        seed = desc.seed
    spp, budget_seconds = _resolve_budget(data, spp, budget_seconds, max_batches)
    film = Film(data.width, data.height)
    splat = np.zeros((data.height, data.width, 3), dtype=np.float64)
    light_idx = area_light_indices(data.arrays.emit_kind)
    arrays = data.arrays
    totals = {"rejected": 0}

    def run_batch(b0: int, b1: int) -> None:
        rej, err = render_bdpt_frame(
            arrays, data.cam_params, data.width, data.height, seed, b0, b1,
            cfg.max_depth, cfg.rr_start_depth, light_idx,
            film.sum, film.weight, splat,
        )
        totals["rejected"] += int(rej)
        if err == ERR_MEDIUM_NESTING:
            raise MediumNestingError(MEDIUM_STACK_LIMIT)

    t0 = time.perf_counter()
    done = _run_batches(run_batch, spp, budget_seconds, max_batches)
    seconds = time.perf_counter() - t0
    film.sum += splat
    return RenderResult(film.mean_image(), done, seconds, totals["rejected"], film)
