"""XML scene dialect: parsing, structured errors, canonical serialization."""

import math

import numpy as np
import pytest

from raylab.bsdf import Conductor, Dielectric, Diffuse, Null, Plastic
from raylab.emitters import (
    AreaEmitter,
    ConstantEnvEmitter,
    DirectionalEmitter,
    SpotEmitter,
)
from raylab.errors import SceneFormatError, SceneValidationError
from raylab.geometry import Box, Quad, Sphere, TriMesh
from raylab.media import DipoleModel, HomogeneousMedium
from raylab.scene import Camera, IntegratorConfig, SceneDescription, ShapeEntry
from raylab.sceneparse import parse_scene, serialize_scene

MINIMAL = """\
<scene version="0.5.0">
  <integrator type="path"/>
  <sensor type="perspective">
    <float name="fov" value="45"/>
    <transform name="toWorld">
      <lookat origin="0, 1, 4" target="0, 0.5, 0" up="0, 1, 0"/>
    </transform>
    <film type="hdrfilm">
      <integer name="width" value="32"/>
      <integer name="height" value="24"/>
    </film>
    <sampler type="independent">
      <integer name="sampleCount" value="8"/>
      <integer name="seed" value="3"/>
    </sampler>
  </sensor>
  <bsdf type="diffuse" id="floor">
    <rgb name="reflectance" value="0.7, 0.6, 0.5"/>
  </bsdf>
  <shape type="quad">
    <point name="corner" x="-1" y="0" z="-1"/>
    <vector name="e1" x="2" y="0" z="0"/>
    <vector name="e2" x="0" y="0" z="2"/>
    <ref id="floor"/>
  </shape>
  <shape type="quad">
    <point name="corner" x="-0.5" y="1.9" z="-0.5"/>
    <vector name="e1" x="0" y="0" z="1"/>
    <vector name="e2" x="1" y="0" z="0"/>
    <ref id="floor"/>
    <emitter type="area">
      <rgb name="radiance" value="12, 12, 12"/>
    </emitter>
  </shape>
</scene>
"""


def test_minimal_document_smoke():
    desc = parse_scene(MINIMAL)
    assert len(desc.shapes) == 2
    assert len(desc.emitters) == 1
    assert isinstance(desc.emitters[0], AreaEmitter)
    assert desc.camera.width == 32 and desc.camera.height == 24
    assert desc.camera.origin == (0.0, 1.0, 4.0)
    assert desc.integrator.kind == "pt"
    assert desc.spp == 8 and desc.seed == 3
    assert desc.warnings == []


def test_dangling_ref_error_names_the_id():
    doc = MINIMAL.replace('<ref id="floor"/>', '<ref id="marble"/>', 1)
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "marble" in str(exc_info.value)


def test_malformed_xml_reports_position():
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene("<scene version='0.5.0'>\n  <bsdf\n</scene>")
    err = exc_info.value
    assert err.line >= 2, f"expected a position on line >= 2, got {err.line}"
    assert "line" in str(err)


def test_invalid_numeric_literal_reports_position():
    doc = MINIMAL.replace('value="45"', 'value="45q"')
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    err = exc_info.value
    assert "45q" in str(err)
    assert err.line == 4, f"literal sits on line 4, error said {err.line}"


def test_missing_camera_is_an_error():
    doc = '<scene version="0.5.0"><emitter type="constant"/></scene>'
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "camera" in str(exc_info.value) or "sensor" in str(exc_info.value)


def test_unknown_attribute_warns_but_parses():
    doc = MINIMAL.replace('<shape type="quad">', '<shape type="quad" flavor="minty">', 1)
    desc = parse_scene(doc)
    assert any("flavor" in w for w in desc.warnings), desc.warnings
    assert len(desc.shapes) == 2


def test_unknown_integrator_falls_back_to_pt():
    doc = MINIMAL.replace('type="path"', 'type="irrcache"')
    desc = parse_scene(doc)
    assert desc.integrator.kind == "pt"
    assert any("irrcache" in w for w in desc.warnings)


def test_unknown_bsdf_substitutes_diffuse_with_warning():
    doc = MINIMAL.replace('type="diffuse"', 'type="velvet"')
    desc = parse_scene(doc)
    assert desc.materials[0] == Diffuse((0.5, 0.5, 0.5))
    assert any("velvet" in w for w in desc.warnings)


def test_unknown_shape_type_is_an_error():
    doc = MINIMAL.replace('<shape type="quad">', '<shape type="heightfield">', 1)
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "heightfield" in str(exc_info.value)


def test_unknown_emitter_type_is_an_error():
    doc = MINIMAL.replace("</scene>", '<emitter type="sunsky"/></scene>')
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "sunsky" in str(exc_info.value)


def test_duplicate_id_is_an_error():
    doc = MINIMAL.replace(
        "<shape", '<bsdf type="null" id="floor"/><shape', 1
    )
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "floor" in str(exc_info.value)


def test_parser_totality_on_garbage():
    cases = [
        "",
        "plain text, no xml at all",
        "<scene>",
        "<scene/>",
        "<notascene/>",
        "<scene version='0.5.0'><shape/></scene>",
        "<scene version='0.5.0'><shape type='sphere'><float name='radius' value='nope'/></shape></scene>",
        "<scene version='0.5.0'><sensor type='perspective'><transform name='toWorld'><matrix value='1 2 3'/></transform></sensor></scene>",
        '<scene version="0.5.0"><sensor type="perspective"/><emitter type="constant"/><shape type="trimesh"><float_array name="positions" value="0 0"/><integer_array name="indices" value="0"/></shape></scene>',
        "\x00\x01\x02",
        "<scene version='0.5.0'><bsdf/></scene>",
    ]
    for text in cases:
        with pytest.raises((SceneFormatError, SceneValidationError)):
            parse_scene(text)


def test_all_material_types_parse():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <bsdf type="diffuse" id="a"><rgb name="reflectance" value="0.1, 0.2, 0.3"/></bsdf>
      <bsdf type="conductor" id="b"><rgb name="eta" value="0.2"/><rgb name="k" value="3.9"/></bsdf>
      <bsdf type="roughconductor" id="c"><float name="alpha" value="0.2"/></bsdf>
      <bsdf type="dielectric" id="d"><float name="intIOR" value="1.49"/><float name="extIOR" value="1.0"/></bsdf>
      <bsdf type="roughdielectric" id="e"><float name="alpha" value="0.05"/></bsdf>
      <bsdf type="plastic" id="f"><rgb name="diffuseReflectance" value="0.8, 0.1, 0.1"/></bsdf>
      <bsdf type="plastic" id="g">
        <rgb name="sssSigmaA" value="0.01, 0.02, 0.03"/>
        <rgb name="sssSigmaS" value="1.0, 1.2, 1.4"/>
        <float name="sssEta" value="1.3"/>
      </bsdf>
      <bsdf type="null" id="h"/>
      <emitter type="constant"/>
    </scene>"""
    desc = parse_scene(doc)
    mats = desc.materials
    assert mats[0] == Diffuse((0.1, 0.2, 0.3))
    assert mats[1] == Conductor((0.2, 0.2, 0.2), (3.9, 3.9, 3.9), 0.0)
    assert isinstance(mats[2], Conductor) and mats[2].roughness == 0.2
    assert mats[3] == Dielectric(1.49, 1.0, 0.0)
    assert isinstance(mats[4], Dielectric) and mats[4].roughness == 0.05
    assert mats[5] == Plastic((0.8, 0.1, 0.1), 1.49, None)
    assert mats[6].sss == DipoleModel((0.01, 0.02, 0.03), (1.0, 1.2, 1.4), 1.3)
    assert mats[7] == Null()


def test_plastic_with_half_sss_spec_is_an_error():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <bsdf type="plastic" id="g"><rgb name="sssSigmaA" value="0.01"/></bsdf>
      <emitter type="constant"/>
    </scene>"""
    with pytest.raises(SceneFormatError):
        parse_scene(doc)


def test_world_emitters_and_media_parse():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <medium type="homogeneous" id="fog">
        <rgb name="sigmaA" value="0.1, 0.1, 0.1"/>
        <rgb name="sigmaS" value="0.4, 0.5, 0.6"/>
      </medium>
      <bsdf type="null" id="skin"/>
      <shape type="sphere">
        <point name="center" x="0" y="0" z="0"/>
        <float name="radius" value="2"/>
        <ref id="skin"/>
        <ref name="interior" id="fog"/>
      </shape>
      <emitter type="spot">
        <rgb name="intensity" value="5, 5, 5"/>
        <point name="position" x="0" y="4" z="0"/>
        <vector name="direction" x="0" y="-1" z="0"/>
        <float name="cutoffAngle" value="25"/>
        <float name="beamWidth" value="20"/>
      </emitter>
      <emitter type="directional">
        <rgb name="irradiance" value="1, 2, 3"/>
        <vector name="direction" x="0" y="-1" z="1"/>
      </emitter>
      <emitter type="constant">
        <rgb name="radiance" value="0.05"/>
      </emitter>
    </scene>"""
    desc = parse_scene(doc)
    assert desc.media == [HomogeneousMedium((0.1, 0.1, 0.1), (0.4, 0.5, 0.6))]
    assert desc.shapes[0].interior_medium == 0
    assert desc.shapes[0].exterior_medium is None
    spot, sun, env = desc.emitters
    assert spot == SpotEmitter((5.0, 5.0, 5.0), (0.0, 4.0, 0.0), (0.0, -1.0, 0.0), 25.0, 20.0)
    assert sun == DirectionalEmitter((1.0, 2.0, 3.0), (0.0, -1.0, 1.0))
    assert env == ConstantEnvEmitter((0.05, 0.05, 0.05))


def test_rectangle_and_cube_lower_to_quad_and_box():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <shape type="rectangle">
        <transform name="toWorld">
          <scale value="2.0"/>
          <translate x="0" y="1" z="0"/>
        </transform>
      </shape>
      <shape type="cube">
        <transform name="toWorld">
          <scale x="1" y="2" z="3"/>
          <translate x="10" y="0" z="0"/>
        </transform>
      </shape>
      <emitter type="constant"/>
    </scene>"""
    desc = parse_scene(doc)
    quad = desc.shapes[0].shape
    assert isinstance(quad, Quad)
    assert quad.corner == (-2.0, -1.0, 0.0)
    assert quad.e1 == (4.0, 0.0, 0.0) and quad.e2 == (0.0, 4.0, 0.0)
    box = desc.shapes[1].shape
    assert box == Box((9.0, -2.0, -3.0), (11.0, 2.0, 3.0))


def test_rotated_cube_is_rejected():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <shape type="cube">
        <transform name="toWorld"><rotate x="0" y="0" z="1" angle="30"/></transform>
      </shape>
      <emitter type="constant"/>
    </scene>"""
    with pytest.raises(SceneFormatError) as exc_info:
        parse_scene(doc)
    assert "axis-aligned" in str(exc_info.value)


def test_trimesh_parses_inline_arrays():
    doc = """<scene version="0.5.0">
      <sensor type="perspective"/>
      <shape type="trimesh">
        <float_array name="positions" value="0 0 0  1 0 0  0 1 0"/>
        <integer_array name="indices" value="0 1 2"/>
      </shape>
      <emitter type="constant"/>
    </scene>"""
    desc = parse_scene(doc)
    mesh = desc.shapes[0].shape
    assert isinstance(mesh, TriMesh)
    assert mesh.positions.shape == (3, 3) and mesh.faces.shape == (1, 3)


def test_matrix_sensor_transform():
    # Column 2 is the view direction, column 1 the up vector, column 3 the
    # origin; a pure translation looks down +z from (2, 3, 4).
    doc = """<scene version="0.5.0">
      <sensor type="perspective">
        <transform name="toWorld">
          <matrix value="1 0 0 2  0 1 0 3  0 0 1 4  0 0 0 1"/>
        </transform>
      </sensor>
      <emitter type="constant"/>
    </scene>"""
    cam = parse_scene(doc).camera
    assert cam.origin == (2.0, 3.0, 4.0)
    assert cam.target == (2.0, 3.0, 5.0)
    assert cam.up == (0.0, 1.0, 0.0)


def _suite_like_scene():
    mesh = TriMesh(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1.0, 0.25]]),
        np.array([[0, 1, 2]]),
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]),
    )
    light_quad = Quad((-0.5, 1.99, -0.5), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    sphere = Sphere((0.3, 0.4, 0.3), 0.4)
    return SceneDescription(
        camera=Camera((0.0, 1.0, 3.9), (0.0, 1.0, 0.0), (0.0, 1.0, 0.0), 39.5, 96, 64),
        integrator=IntegratorConfig(kind="bdpt", max_depth=12, rr_start_depth=6),
        shapes=[
            ShapeEntry(light_quad, 0, emitter=0),
            ShapeEntry(sphere, 1, interior_medium=0),
            ShapeEntry(mesh, 2),
            ShapeEntry(Box((-2.0, -0.1, -2.0), (2.0, 0.0, 2.0)), 3),
        ],
        materials=[
            Diffuse((0.75, 0.25, 0.125)),
            Dielectric(1.49, 1.000277, 0.05),
            Conductor((0.2, 0.9, 1.1), (3.9, 2.4, 2.1), 0.2),
            Plastic((0.2, 0.4, 0.6), 1.49, DipoleModel((0.01, 0.02, 0.04), (1.0, 0.9, 0.8), 1.3)),
        ],
        emitters=[
            AreaEmitter((17.0, 12.0, 4.0), light_quad),
            SpotEmitter((1.0, 2.0, 3.0), (0.0, 3.0, 0.0), (0.0, -1.0, 0.0), 24.0, 18.0),
            DirectionalEmitter((0.5, 0.5, 0.75), (0.1, -1.0, 0.2)),
            ConstantEnvEmitter((0.03125, 0.0625, 0.125)),
        ],
        media=[HomogeneousMedium((0.25, 0.5, 0.75), (1.5, 1.25, 1.0))],
        seed=11,
        spp=48,
    )


def test_round_trip_structural_identity():
    d0 = _suite_like_scene()
    text1 = serialize_scene(d0)
    d1 = parse_scene(text1)
    text2 = serialize_scene(d1)
    d2 = parse_scene(text2)
    assert d1 == d2, "parse(serialize(x)) must be a fixed point"
    assert d0 == d1, "canonical builder scene should survive unchanged"


def test_serialization_is_deterministic():
    d0 = _suite_like_scene()
    assert serialize_scene(d0) == serialize_scene(_suite_like_scene())
    text = serialize_scene(d0)
    assert serialize_scene(parse_scene(text)) == text, "canonical form is a fixed point"


def test_serialize_rejects_orphan_area_emitter():
    desc = _suite_like_scene()
    desc.shapes = [s for s in desc.shapes if s.emitter is None]
    with pytest.raises(SceneValidationError):
        serialize_scene(desc)


def test_exotic_floats_round_trip():
    d0 = _suite_like_scene()
    tricky = (1e-30, 1.0 + 2**-52, 12345678.901234567)
    d0.materials[0] = Diffuse(tricky)
    d1 = parse_scene(serialize_scene(d0))
    assert d1.materials[0].reflectance == tricky, "repr floats must re-read exactly"
