"""Emitter sampling checks: closed-form irradiance, pdf consistency, falloff."""

import math

import pytest
from numba import njit

from raylab.emitters import (
    AreaEmitter,
    ConstantEnvEmitter,
    DirectionalEmitter,
    SpotEmitter,
    emitter_arrays,
    emitter_eval_env,
    emitter_pdf_direct,
    emitter_pdf_emission,
    emitter_sample_direct,
    emitter_sample_emission,
    is_delta_emitter,
)
from raylab.errors import SceneValidationError
from raylab.geometry import Quad, Sphere
from raylab.rng import Rng, rng_next, stream_init

BOUND_C = (0.0, 0.0, 0.0)
BOUND_R = 25.0


def _pack(*emitters):
    return emitter_arrays(list(emitters), BOUND_C, BOUND_R)


@njit(cache=True)
def _irradiance_mc(emit_kind, emit_p, e, p, n, seed, n_samples):
    state = stream_init(seed, 0, 0, 0)
    acc = 0.0
    for _ in range(n_samples):
        u1, state = rng_next(state)
        u2, state = rng_next(state)
        wi, _dist, val, pdf, _delta = emitter_sample_direct(emit_kind, emit_p, e, p, u1, u2)
        if pdf <= 0.0:
            continue
        cos_p = wi[0] * n[0] + wi[1] * n[1] + wi[2] * n[2]
        if cos_p <= 0.0:
            continue
        acc += val[0] * cos_p / pdf
    return acc / n_samples


@njit(cache=True)
def _power_mc(emit_kind, emit_p, e, seed, n_samples):
    state = stream_init(seed, 1, 0, 0)
    acc = 0.0
    for _ in range(n_samples):
        u1, state = rng_next(state)
        u2, state = rng_next(state)
        u3, state = rng_next(state)
        u4, state = rng_next(state)
        origin, d, n, val, pdf_a, pdf_d, _delta = emitter_sample_emission(
            emit_kind, emit_p, e, u1, u2, u3, u4
        )
        cos_l = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
        if cos_l <= 0.0:
            continue
        acc += val[0] * cos_l / (pdf_a * pdf_d)
    return acc / n_samples


def test_sphere_emitter_irradiance_closed_form():
    # Unit sphere, radiance 1, ten units away from a facing patch.  The
    # exact irradiance is L pi sin^2(half-angle) = pi R^2 / d^2 = pi / 100.
    kind, p = _pack(AreaEmitter((1.0, 1.0, 1.0), Sphere((0.0, 0.0, 10.0), 1.0)))
    est = _irradiance_mc(kind, p, 0, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 42, 100000)
    want = math.pi / 100.0
    assert abs(est - want) / want < 0.02, f"irradiance {est} vs {want}"


def test_area_pdf_direct_self_consistency():
    emitters = [
        AreaEmitter((1.0, 1.0, 1.0), Sphere((2.0, 1.0, 5.0), 0.8)),
        AreaEmitter((1.0, 1.0, 1.0), Quad((-1.0, 3.0, -1.0), (2.0, 0.0, 0.0), (0.0, 0.0, 2.0))),
        ConstantEnvEmitter((0.5, 0.5, 0.5)),
    ]
    kind, p = emitter_arrays(emitters, BOUND_C, BOUND_R)
    ref = (0.0, 0.0, 0.0)
    rng = Rng(7)
    for e in range(3):
        checked = 0
        for _ in range(10000):
            u1, u2 = rng.next_2d()
            wi, _dist, _val, pdf, _delta = emitter_sample_direct(kind, p, e, ref, u1, u2)
            if pdf <= 0.0:
                continue
            back = emitter_pdf_direct(kind, p, e, ref, wi)
            rel = abs(back - pdf) / pdf
            assert rel < 1e-6, f"emitter {e}: sample pdf {pdf} vs pdf_direct {back}"
            checked += 1
        assert checked > 3000, f"emitter {e}: too few valid samples ({checked})"


def test_area_pdf_direct_miss_is_zero():
    kind, p = _pack(AreaEmitter((1.0, 1.0, 1.0), Sphere((0.0, 0.0, 10.0), 1.0)))
    assert emitter_pdf_direct(kind, p, 0, (0.0, 0.0, 0.0), (0.0, 0.0, -1.0)) == 0.0
    assert emitter_pdf_direct(kind, p, 0, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)) == 0.0


def test_quad_exterior_face_only():
    # e1 x e2 = +y here; a point below the quad sees only the back face.
    quad = Quad((-1.0, 2.0, -1.0), (0.0, 0.0, 2.0), (2.0, 0.0, 0.0))
    kind, p = _pack(AreaEmitter((3.0, 3.0, 3.0), quad))
    rng = Rng(9)
    p_above = (0.0, 4.0, 0.0)
    p_below = (0.0, 0.0, 0.0)
    got_light = 0
    for _ in range(500):
        u1, u2 = rng.next_2d()
        _wi, _d, val, pdf, _ = emitter_sample_direct(kind, p, 0, p_above, u1, u2)
        if pdf > 0.0 and val[0] > 0.0:
            got_light += 1
        _wi, _d, val2, pdf2, _ = emitter_sample_direct(kind, p, 0, p_below, u1, u2)
        assert pdf2 == 0.0 and val2 == (0.0, 0.0, 0.0), "back face leaked radiance"
    assert got_light == 500
    assert emitter_pdf_direct(kind, p, 0, p_below, (0.0, 1.0, 0.0)) == 0.0


def test_spot_cutoff_and_falloff():
    spot = SpotEmitter((10.0, 10.0, 10.0), (0.0, 5.0, 0.0), (0.0, -1.0, 0.0),
                       cutoff_deg=30.0, beam_deg=20.0)
    kind, p = _pack(spot)

    def radiance_at(x):
        _wi, _d, val, pdf, delta = emitter_sample_direct(kind, p, 0, (x, 0.0, 0.0), 0.5, 0.5)
        assert delta == 1 and pdf == 1.0
        return val[0]

    # Straight below: full intensity over d^2 = 25.
    assert abs(radiance_at(0.0) - 10.0 / 25.0) < 1e-12
    # Inside the beam angle: no falloff yet.
    x_beam = 5.0 * math.tan(math.radians(19.9))
    d2 = x_beam ** 2 + 25.0
    assert abs(radiance_at(x_beam) - 10.0 / d2) < 1e-3
    # Beyond the cutoff: exactly zero.
    x_out = 5.0 * math.tan(math.radians(31.0))
    assert radiance_at(x_out) == 0.0
    # Midway between beam and cutoff: linear in angle.
    x_mid = 5.0 * math.tan(math.radians(25.0))
    d2_mid = x_mid ** 2 + 25.0
    want = 10.0 * 0.5 / d2_mid
    assert abs(radiance_at(x_mid) - want) / want < 1e-9


def test_spot_falloff_continuity_at_beam():
    spot = SpotEmitter((1.0, 1.0, 1.0), (0.0, 5.0, 0.0), (0.0, -1.0, 0.0),
                       cutoff_deg=30.0, beam_deg=20.0)
    kind, p = _pack(spot)
    vals = []
    for deg in (19.999, 20.0, 20.001):
        x = 5.0 * math.tan(math.radians(deg))
        _wi, _d, val, _pdf, _ = emitter_sample_direct(kind, p, 0, (x, 0.0, 0.0), 0.5, 0.5)
        vals.append(val[0] * (x * x + 25.0))
    assert abs(vals[0] - vals[1]) < 1e-3 and abs(vals[1] - vals[2]) < 1e-3, (
        f"falloff discontinuous at beam angle: {vals}"
    )


def test_directional_constant_direction():
    em = DirectionalEmitter((2.0, 2.0, 2.0), (0.0, -1.0, 0.0))
    kind, p = _pack(em)
    assert is_delta_emitter(em)
    for ref in ((0.0, 0.0, 0.0), (5.0, 1.0, -3.0)):
        wi, dist, val, pdf, delta = emitter_sample_direct(kind, p, 0, ref, 0.3, 0.8)
        assert wi == (0.0, 1.0, 0.0) and math.isinf(dist)
        assert val == (2.0, 2.0, 2.0) and pdf == 1.0 and delta == 1
    assert emitter_pdf_direct(kind, p, 0, (0.0, 0.0, 0.0), (0.0, 1.0, 0.0)) == 0.0


def test_env_uniform_pdf():
    kind, p = _pack(ConstantEnvEmitter((0.7, 0.8, 0.9)))
    want = 1.0 / (4.0 * math.pi)
    rng = Rng(21)
    for _ in range(200):
        u1, u2 = rng.next_2d()
        wi, dist, val, pdf, delta = emitter_sample_direct(kind, p, 0, (1.0, 2.0, 3.0), u1, u2)
        assert abs(pdf - want) < 1e-15 and delta == 0
        assert math.isinf(dist) and val == (0.7, 0.8, 0.9)
        assert emitter_pdf_direct(kind, p, 0, (0.0, 0.0, 0.0), wi) == pdf
    assert emitter_eval_env(kind, p, 1) == (0.7, 0.8, 0.9)


def test_sphere_emitter_power_closed_form():
    # Power of a unit sphere at radiance 1: A pi L = 4 pi^2.
    kind, p = _pack(AreaEmitter((1.0, 1.0, 1.0), Sphere((0.0, 0.0, 0.0), 1.0)))
    est = _power_mc(kind, p, 0, 5, 1000000)
    want = 4.0 * math.pi * math.pi
    assert abs(est - want) / want < 0.01, f"power {est} vs {want}"


def test_quad_emission_geometry():
    quad = Quad((0.0, 3.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    kind, p = _pack(AreaEmitter((1.0, 1.0, 1.0), quad))
    rng = Rng(2)
    for _ in range(1000):
        u1, u2 = rng.next_2d()
        u3, u4 = rng.next_2d()
        origin, d, n, _val, pdf_a, pdf_d, _ = emitter_sample_emission(kind, p, 0, u1, u2, u3, u4)
        assert abs(origin[1] - 3.0) < 1e-12
        assert 0.0 <= origin[0] <= 1.0 and 0.0 <= origin[2] <= 1.0
        assert n == (0.0, 1.0, 0.0)
        cos_l = d[1]
        assert cos_l > 0.0, "emission direction not in the exterior hemisphere"
        assert abs(pdf_a - 1.0) < 1e-12
        assert abs(pdf_d - cos_l / math.pi) < 1e-12
        pa, pd = emitter_pdf_emission(kind, p, 0, n, d)
        assert abs(pa - pdf_a) < 1e-15 and abs(pd - pdf_d) < 1e-12


def test_directional_emission_disk():
    em = DirectionalEmitter((1.0, 1.0, 1.0), (0.0, -1.0, 0.0))
    kind, p = _pack(em)
    rng = Rng(3)
    for _ in range(500):
        u1, u2 = rng.next_2d()
        u3, u4 = rng.next_2d()
        origin, d, _n, _val, pdf_a, pdf_d, delta = emitter_sample_emission(
            kind, p, 0, u1, u2, u3, u4
        )
        assert d == (0.0, -1.0, 0.0) and delta == 1 and pdf_d == 1.0
        # Origins lie on the disk touching the bounding sphere, against the flow.
        assert abs(origin[1] - BOUND_R) < 1e-9
        assert math.hypot(origin[0], origin[2]) <= BOUND_R + 1e-9
        assert abs(pdf_a - 1.0 / (math.pi * BOUND_R ** 2)) < 1e-15


def test_env_emission_covers_sphere():
    kind, p = _pack(ConstantEnvEmitter((1.0, 1.0, 1.0)))
    rng = Rng(4)
    mean = [0.0, 0.0, 0.0]
    for _ in range(2000):
        u1, u2 = rng.next_2d()
        u3, u4 = rng.next_2d()
        origin, d, _n, _val, pdf_a, pdf_d, _ = emitter_sample_emission(kind, p, 0, u1, u2, u3, u4)
        # Origin sits on the far side of the bounding sphere against d.
        r = math.sqrt(sum(c * c for c in origin))
        assert r >= BOUND_R - 1e-9
        assert abs(pdf_d - 1.0 / (4.0 * math.pi)) < 1e-15
        assert abs(pdf_a - 1.0 / (math.pi * BOUND_R ** 2)) < 1e-15
        for i in range(3):
            mean[i] += d[i] / 2000.0
    assert math.sqrt(sum(c * c for c in mean)) < 0.05, "env directions not uniform"


def test_emitter_validation():
    with pytest.raises(SceneValidationError):
        _pack(SpotEmitter((1.0, 1.0, 1.0), (0.0, 0.0, 0.0), (0.0, -1.0, 0.0),
                          cutoff_deg=10.0, beam_deg=20.0))
    with pytest.raises(SceneValidationError):
        _pack(AreaEmitter((-1.0, 0.0, 0.0), Sphere((0.0, 0.0, 0.0), 1.0)))
    with pytest.raises(SceneValidationError):
        _pack(DirectionalEmitter((math.inf, 1.0, 1.0), (0.0, -1.0, 0.0)))
