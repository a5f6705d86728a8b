"""Path tracer and volumetric path tracer behavior.

The strongest checks here are exact: an albedo-1 diffuse sphere inside a
constant unit environment renders to 1.0 in every pixel with zero variance
(throughput ratios cancel bit-for-bit), and a vacuum medium changes nothing
about the sample stream, so the volumetric tracer must match the plain one
bit-for-bit on such scenes.
"""

import math

import numpy as np
import pytest

from raylab.bsdf import Dielectric, Diffuse, Null, Plastic, copper
from raylab.emitters import (
    AreaEmitter,
    ConstantEnvEmitter,
    DirectionalEmitter,
    SpotEmitter,
)
from raylab.errors import CapabilityError, MediumNestingError
from raylab.geometry import Box, Quad, Sphere
from raylab.integrators import render_pt, render_volpath
from raylab.media import HomogeneousMedium
from raylab.scene import (
    Camera,
    IntegratorConfig,
    SceneDescription,
    ShapeEntry,
    generate_camera_ray,
)


def _furnace_scene(albedo=1.0, width=32, height=32, max_depth=32):
    return SceneDescription(
        camera=Camera(
            origin=(0.0, 0.0, 4.0), target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=45.0, width=width, height=height,
        ),
        integrator=IntegratorConfig(kind="pt", max_depth=max_depth),
        shapes=[ShapeEntry(Sphere((0.0, 0.0, 0.0), 1.0), material=0)],
        materials=[Diffuse((albedo, albedo, albedo))],
        emitters=[ConstantEnvEmitter((1.0, 1.0, 1.0))],
    )


# Quad light 1x1 at y = 3 facing down; diffuse floor 4x4 at y = 0.
_LIGHT_L = 5.0
_FLOOR_RHO = 0.6


def _direct_scene(max_depth=2, width=33, height=33, kind="pt"):
    light = Quad((-0.5, 3.0, -0.5), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    return SceneDescription(
        camera=Camera(
            origin=(0.0, 1.5, 5.0), target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=40.0, width=width, height=height,
        ),
        integrator=IntegratorConfig(kind=kind, max_depth=max_depth),
        shapes=[
            ShapeEntry(Quad((-6.0, 0.0, -6.0), (0.0, 0.0, 12.0), (12.0, 0.0, 0.0)), material=0),
            ShapeEntry(light, material=1, emitter=0),
        ],
        materials=[Diffuse((_FLOOR_RHO, _FLOOR_RHO, _FLOOR_RHO)), Null()],
        emitters=[AreaEmitter((_LIGHT_L, _LIGHT_L, _LIGHT_L), light)],
    )


def _direct_quadrature(p, n=16):
    """Midpoint quadrature of the direct integral over the light quad."""
    total = 0.0
    for i in range(n):
        for j in range(n):
            q = (-0.5 + (i + 0.5) / n, 3.0, -0.5 + (j + 0.5) / n)
            d = (q[0] - p[0], q[1] - p[1], q[2] - p[2])
            d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
            dist = math.sqrt(d2)
            cos_p = d[1] / dist
            cos_l = d[1] / dist  # light normal is (0,-1,0)
            if cos_p <= 0.0 or cos_l <= 0.0:
                continue
            total += _LIGHT_L * (_FLOOR_RHO / math.pi) * cos_p * cos_l / d2 * (1.0 / (n * n))
    return total


def _floor_hit(camera, px, py, u1=0.5, u2=0.5):
    o, d = generate_camera_ray(camera, px, py, u1, u2)
    t = -o[1] / d[1]
    assert t > 0.0, f"probe pixel ({px}, {py}) does not look at the floor"
    p = (o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2])
    assert abs(p[0]) < 6.0 and abs(p[2]) < 6.0, f"probe ({px}, {py}) misses the floor quad"
    return p


def _pixel_quadrature(camera, px, py, n=4):
    """Pixel-footprint average of the direct integral (the renderer jitters
    the sample position inside each pixel, so point values are not enough)."""
    total = 0.0
    for i in range(n):
        for j in range(n):
            p = _floor_hit(camera, px, py, (i + 0.5) / n, (j + 0.5) / n)
            total += _direct_quadrature(p)
    return total / (n * n)


def test_furnace_every_pixel_exactly_one():
    res = render_pt(_furnace_scene(), spp=16)
    assert np.array_equal(res.image, np.ones_like(res.image)), (
        f"furnace deviates: min {res.image.min()} max {res.image.max()}"
    )
    assert res.rejected == 0


def test_furnace_albedo_half_is_exact():
    # One diffuse bounce scales throughput by exactly the albedo, so every
    # sample is exactly 0.5 (sphere) or 1.0 (environment); pixel means are
    # k/8 mixtures of the two and nothing else.
    res = render_pt(_furnace_scene(albedo=0.5), spp=8)
    k = (res.image.astype(np.float64) - 0.5) / 0.0625
    assert np.array_equal(k, np.round(k)), f"off-grid pixel means: {np.unique(res.image)}"
    assert res.image.min() == 0.5 and res.image.max() == 1.0


def test_empty_scene_env_is_exactly_the_constant():
    c = 0.7
    desc = SceneDescription(
        camera=Camera(
            origin=(0.0, 0.0, 0.0), target=(0.0, 0.0, -1.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=60.0, width=8, height=8,
        ),
        integrator=IntegratorConfig(kind="pt"),
        shapes=[],
        materials=[],
        emitters=[ConstantEnvEmitter((c, c, c))],
    )
    res = render_pt(desc, spp=4)
    assert np.array_equal(res.image, np.full((8, 8, 3), np.float32(c))), (
        f"empty-scene env render is not the constant: {np.unique(res.image)}"
    )


def test_direct_lighting_matches_quadrature():
    desc = _direct_scene()
    res = render_pt(desc, spp=2048, seed=3)
    probes = [(16, 16), (10, 14), (24, 24), (6, 20), (26, 13)]
    for px, py in probes:
        want = _pixel_quadrature(desc.camera, px, py)
        got = float(res.image[py, px, 0])
        rel = abs(got - want) / want
        assert rel < 0.01, f"probe ({px},{py}): rendered {got:.5f} vs quadrature {want:.5f} ({rel:.2%})"


def test_simple_variant_matches_quadrature_on_direct_scene():
    # Without MIS the light sample is the only direct strategy; it is a
    # complete estimator of the same integral.
    desc = _direct_scene(kind="volpath-simple")
    res = render_volpath(desc, spp=2048, seed=5, simple=True)
    px, py = 16, 16
    want = _pixel_quadrature(desc.camera, px, py)
    got = float(res.image[py, px, 0])
    assert abs(got - want) / want < 0.01, f"simple variant {got:.5f} vs quadrature {want:.5f}"


def test_null_medium_scene_is_pixel_exact_with_pt():
    base = _furnace_scene()
    vacuum = HomogeneousMedium(sigma_a=(0.0, 0.0, 0.0), sigma_s=(0.0, 0.0, 0.0))
    shapes = list(base.shapes) + [
        ShapeEntry(
            Box((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
            material=1, interior_medium=0,
        )
    ]
    desc = SceneDescription(
        camera=base.camera,
        integrator=base.integrator,
        shapes=shapes,
        materials=list(base.materials) + [Null()],
        emitters=list(base.emitters),
        media=[vacuum],
    )
    a = render_pt(desc, spp=16, seed=9)
    b = render_volpath(desc, spp=16, seed=9)
    assert np.array_equal(a.image, b.image), "volpath diverged from pt on a vacuum medium"
    assert np.array_equal(a.image, np.ones_like(a.image)), "null boundary changed the furnace"


def _slab_scene(with_slab: bool, sigma_a=1.0, sigma_s=0.0, max_depth=2, seed=0):
    shapes = [
        ShapeEntry(Quad((-1.0, 0.0, -1.0), (0.0, 0.0, 2.0), (2.0, 0.0, 0.0)), material=0),
    ]
    media = []
    if with_slab:
        shapes.append(
            ShapeEntry(Box((-1.0, 1.0, -1.0), (1.0, 2.0, 1.0)), material=1, interior_medium=0)
        )
        media.append(
            HomogeneousMedium(
                sigma_a=(sigma_a,) * 3, sigma_s=(sigma_s,) * 3
            )
        )
    return SceneDescription(
        camera=Camera(
            origin=(0.0, 0.4, 4.0), target=(0.0, 0.05, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=18.0, width=17, height=17,
        ),
        integrator=IntegratorConfig(kind="volpath", max_depth=max_depth),
        shapes=shapes,
        materials=[Diffuse((1.0, 1.0, 1.0)), Null()],
        emitters=[DirectionalEmitter((1.0, 1.0, 1.0), (0.0, -1.0, 0.0))],
        media=media,
        seed=seed,
    )


def test_beer_lambert_slab_ratio():
    lit = render_volpath(_slab_scene(False), spp=8)
    shaded = render_volpath(_slab_scene(True), spp=8)
    ratio = float(shaded.image.mean() / lit.image.mean())
    want = math.exp(-1.0)
    assert abs(ratio - want) / want < 0.02, f"slab ratio {ratio:.5f} vs e^-1 {want:.5f}"


def test_simple_and_mis_volpath_agree_on_scattering_slab():
    means_mis = []
    means_simple = []
    for seed in range(6):
        desc = _slab_scene(True, sigma_a=0.5, sigma_s=0.5, max_depth=6, seed=seed)
        means_mis.append(float(render_volpath(desc, spp=48).image.mean()))
        means_simple.append(float(render_volpath(desc, spp=48, simple=True).image.mean()))
    m1, m2 = np.mean(means_mis), np.mean(means_simple)
    se = math.sqrt(np.var(means_mis, ddof=1) / 6 + np.var(means_simple, ddof=1) / 6)
    assert abs(m1 - m2) < 3.0 * se + 1e-9, (
        f"volpath variants disagree: {m1:.6f} vs {m2:.6f}, 3se = {3 * se:.6f}"
    )


def test_medium_nesting_beyond_limit_errors():
    vacuumish = HomogeneousMedium(sigma_a=(0.01, 0.01, 0.01), sigma_s=(0.0, 0.0, 0.0))
    shapes = []
    for k in range(9):
        s = 10.0 - k
        shapes.append(
            ShapeEntry(Box((-s, -s, -s), (s, s, s)), material=0, interior_medium=0)
        )
    desc = SceneDescription(
        camera=Camera(
            origin=(0.0, 0.0, 20.0), target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=10.0, width=4, height=4,
        ),
        integrator=IntegratorConfig(kind="volpath"),
        shapes=shapes,
        materials=[Null()],
        emitters=[ConstantEnvEmitter((1.0, 1.0, 1.0))],
        media=[vacuumish],
    )
    with pytest.raises(MediumNestingError):
        render_volpath(desc, spp=1)


def test_pt_refuses_participating_media():
    with pytest.raises(CapabilityError) as exc:
        render_pt(_slab_scene(True), spp=1)
    assert "pt" in str(exc.value)


def test_depth_one_shows_only_emitters():
    light = Quad((-0.5, -0.5, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    desc = SceneDescription(
        camera=Camera(
            origin=(0.0, 0.0, 3.0), target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=50.0, width=15, height=15,
        ),
        integrator=IntegratorConfig(kind="pt", max_depth=1),
        shapes=[ShapeEntry(light, material=0, emitter=0)],
        materials=[Null()],
        emitters=[AreaEmitter((5.0, 5.0, 5.0), light)],
    )
    res = render_pt(desc, spp=4)
    assert res.image[7, 7, 0] == 5.0, f"emitter pixel {res.image[7, 7, 0]} should be radiance"
    assert res.image[0, 0, 0] == 0.0, "corner pixel should see nothing at depth 1"


def test_direct_lighting_requires_depth_two():
    shallow = render_pt(_direct_scene(max_depth=1), spp=16)
    deep = render_pt(_direct_scene(max_depth=2), spp=16)
    p = (20, 16)  # floor probe below the light, away from the light's pixels
    assert shallow.image[p[1], p[0], 0] == 0.0, "depth 1 must not shade the floor"
    assert deep.image[p[1], p[0], 0] > 0.0, "depth 2 must shade the floor"


def test_same_seed_bitwise_other_seed_differs():
    desc = _direct_scene(width=16, height=16)
    a = render_pt(desc, spp=8, seed=11)
    b = render_pt(desc, spp=8, seed=11)
    c = render_pt(desc, spp=8, seed=12)
    assert np.array_equal(a.image, b.image), "same seed must reproduce bitwise"
    assert not np.array_equal(a.image, c.image), "different seed should differ"
    assert a.spp == 8 and a.rejected == 0


def test_replay_batches_match_spp_mode():
    desc = _direct_scene(width=12, height=12)
    by_spp = render_pt(desc, spp=3, seed=2)
    by_batches = render_pt(desc, max_batches=3, seed=2)
    assert np.array_equal(by_spp.image, by_batches.image)
    assert by_batches.spp == 3


def test_time_budget_stops_at_batch_boundary():
    desc = _furnace_scene(width=12, height=12)
    res = render_pt(desc, budget_seconds=0.25)
    assert res.spp >= 1
    assert res.seconds >= 0.25, f"stopped early: {res.seconds:.3f}s for a 0.25s budget"


def test_material_zoo_renders_clean():
    # Every non-null material kind in one image: diffuse floor, rough copper
    # sphere, smooth glass sphere, plastic sphere, under a quad light.
    light = Quad((-0.6, 2.5, -0.6), (1.2, 0.0, 0.0), (0.0, 0.0, 1.2))
    desc = SceneDescription(
        camera=Camera(
            origin=(0.0, 1.2, 4.5), target=(0.0, 0.5, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=40.0, width=24, height=24,
        ),
        integrator=IntegratorConfig(kind="pt", max_depth=8),
        shapes=[
            ShapeEntry(Quad((-3.0, 0.0, -3.0), (0.0, 0.0, 6.0), (6.0, 0.0, 0.0)), material=0),
            ShapeEntry(Sphere((-1.1, 0.5, 0.0), 0.5), material=1),
            ShapeEntry(Sphere((0.0, 0.5, 0.0), 0.5), material=2),
            ShapeEntry(Sphere((1.1, 0.5, 0.0), 0.5), material=3),
            ShapeEntry(light, material=4, emitter=0),
        ],
        materials=[
            Diffuse((0.7, 0.7, 0.7)),
            copper(0.15),
            Dielectric(),
            Plastic((0.2, 0.4, 0.8)),
            Null(),
        ],
        emitters=[AreaEmitter((8.0, 8.0, 8.0), light)],
    )
    res = render_pt(desc, spp=32, seed=4)
    assert res.rejected == 0
    assert np.all(np.isfinite(res.image))
    assert res.image.mean() > 0.01, "scene should not be black"


def test_spot_and_directional_light_paths():
    desc = SceneDescription(
        camera=Camera(
            origin=(0.0, 2.0, 5.0), target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
            fov_y_deg=35.0, width=16, height=16,
        ),
        integrator=IntegratorConfig(kind="pt", max_depth=3),
        shapes=[
            ShapeEntry(Quad((-3.0, 0.0, -3.0), (0.0, 0.0, 6.0), (6.0, 0.0, 0.0)), material=0),
        ],
        materials=[Diffuse((0.8, 0.8, 0.8))],
        emitters=[
            SpotEmitter((40.0, 40.0, 40.0), (1.5, 3.0, 0.0), (-0.45, -1.0, 0.0), 25.0, 18.0),
            DirectionalEmitter((0.5, 0.5, 0.5), (-0.3, -1.0, 0.2)),
        ],
    )
    res = render_pt(desc, spp=16, seed=1)
    assert res.rejected == 0
    assert res.image.mean() > 0.01
    again = render_pt(desc, spp=16, seed=1)
    assert np.array_equal(res.image, again.image)
