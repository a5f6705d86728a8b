"""Mitsuba-style XML scene loading and canonical serialization.

The dialect mirrors Mitsuba 0.5 element and property names wherever the
supported subset overlaps (see docs/scene-format.md for the full grammar):

    scene / integrator / sensor / film / sampler / bsdf / medium / shape /
    emitter / ref, with typed properties integer / float / string / boolean /
    rgb / point / vector / float_array / integer_array / transform.

Recognized constructs whose type falls outside the subset degrade politely
(unknown integrator -> path tracer, unknown bsdf -> gray diffuse, both with a
named warning); constructs that cannot be substituted without silently
changing the rendered image (shapes, emitters, media) fail with a structured
error carrying the 1-based source line and column.

The serializer emits a canonical form: fixed element order (integrator,
sensor, materials, media, shapes with inline area emitters, world emitters),
generated ids m0.., med0.., and repr() floats, so output is bit-identical
across runs and parse(serialize(x)) reproduces x structurally.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional, Union
from xml.parsers import expat

import numpy as np

from .bsdf import (
    Conductor,
    Dielectric,
    Diffuse,
    Material,
    Null,
    Plastic,
    copper,
)
from .emitters import (
    AreaEmitter,
    ConstantEnvEmitter,
    DirectionalEmitter,
    Emitter,
    SpotEmitter,
)
from .errors import RaylabError, SceneFormatError, SceneValidationError
from .geometry import Box, Quad, Shape, Sphere, Transform, TriMesh, load_obj
from .media import DipoleModel, HomogeneousMedium
from .scene import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_SPP,
    Camera,
    IntegratorConfig,
    SceneDescription,
    ShapeEntry,
    validate_scene,
)

SCENE_VERSION = "0.5.0"

_INTEGRATOR_FROM_XML = {
    "path": "pt",
    "volpath_simple": "volpath-simple",
    "volpath": "volpath",
    "bdpt": "bdpt",
    "photonmapper": "pm",
    "pssmlt": "pssmlt",
}
_INTEGRATOR_TO_XML = {v: k for k, v in _INTEGRATOR_FROM_XML.items()}

_PROP_TAGS = {
    "integer",
    "float",
    "string",
    "boolean",
    "rgb",
    "point",
    "vector",
    "float_array",
    "integer_array",
    "transform",
}

_GRAY = (0.5, 0.5, 0.5)


# ---------------------------------------------------------------------------
# DOM with source positions


class _Node:
    __slots__ = ("tag", "attrs", "children", "line", "col")

    def __init__(self, tag: str, attrs: dict, line: int, col: int):
        self.tag = tag
        self.attrs = attrs
        self.children: list[_Node] = []
        self.line = line
        self.col = col

    def fail(self, message: str) -> SceneFormatError:
        return SceneFormatError(message, self.line, self.col)


def _build_dom(text: Union[str, bytes]) -> _Node:
    """Parse XML into a position-annotated tree; expat errors become structured."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SceneFormatError(f"scene file is not valid UTF-8: {exc}") from exc
    parser = expat.ParserCreate()
    roots: list[_Node] = []
    stack: list[_Node] = []

    def start(tag, attrs):
        node = _Node(tag, attrs, parser.CurrentLineNumber, parser.CurrentColumnNumber + 1)
        if stack:
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)

    def end(tag):
        stack.pop()

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        parser.Parse(text, True)
    except expat.ExpatError as exc:
        raise SceneFormatError(
            f"malformed XML: {expat.ErrorString(exc.code)}", exc.lineno, exc.offset + 1
        ) from exc
    if not roots:
        raise SceneFormatError("empty document", 1, 1)
    return roots[0]


# ---------------------------------------------------------------------------
# Typed property access


def _parse_float(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise SceneFormatError(f"invalid numeric literal {text!r}", line, col) from None


def _parse_int(text: str, line: int, col: int) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise SceneFormatError(f"invalid integer literal {text!r}", line, col) from None


def _split_values(text: str) -> list[str]:
    return [p for p in re.split(r"[,\s]+", text.strip()) if p]


def _parse_triple(text: str, line: int, col: int) -> tuple[float, float, float]:
    parts = _split_values(text)
    if len(parts) == 1:
        v = _parse_float(parts[0], line, col)
        return (v, v, v)
    if len(parts) != 3:
        raise SceneFormatError(
            f"expected 1 or 3 components, got {len(parts)}", line, col
        )
    return (
        _parse_float(parts[0], line, col),
        _parse_float(parts[1], line, col),
        _parse_float(parts[2], line, col),
    )


def _xyz_attrs(node: _Node, default: float = 0.0) -> tuple[float, float, float]:
    return (
        _parse_float(node.attrs.get("x", repr(default)), node.line, node.col),
        _parse_float(node.attrs.get("y", repr(default)), node.line, node.col),
        _parse_float(node.attrs.get("z", repr(default)), node.line, node.col),
    )


def _value_attr(node: _Node) -> str:
    if "value" not in node.attrs:
        raise node.fail(f"<{node.tag}> needs a value attribute")
    return node.attrs["value"]


_REQUIRED = object()


class _Props:
    """Typed child properties of one element, with unknown-name warnings."""

    def __init__(self, node: _Node, warnings: list[str]):
        self.node = node
        self.warnings = warnings
        self.by_name: dict[str, _Node] = {}
        self.consumed: set[str] = set()
        self.rest: list[_Node] = []
        for child in node.children:
            if child.tag in _PROP_TAGS:
                name = child.attrs.get("name")
                if name is None:
                    raise child.fail(f"<{child.tag}> property needs a name attribute")
                if name in self.by_name:
                    raise child.fail(f"duplicate property {name!r}")
                self.by_name[name] = child
            else:
                self.rest.append(child)

    def _take(self, name: str, accepted: tuple, kind: str, default):
        node = self.by_name.get(name)
        if node is None:
            if default is _REQUIRED:
                raise self.node.fail(
                    f"<{self.node.tag}> needs a {kind} property named {name!r}"
                )
            return None
        if node.tag not in accepted:
            raise node.fail(f"property {name!r} has type {node.tag}, expected {kind}")
        self.consumed.add(name)
        return node

    def float_(self, name: str, default=_REQUIRED) -> Optional[float]:
        node = self._take(name, ("float", "integer"), "float", default)
        if node is None:
            return default
        return _parse_float(_value_attr(node), node.line, node.col)

    def integer(self, name: str, default=_REQUIRED) -> Optional[int]:
        node = self._take(name, ("integer",), "integer", default)
        if node is None:
            return default
        return _parse_int(_value_attr(node), node.line, node.col)

    def string(self, name: str, default=_REQUIRED) -> Optional[str]:
        node = self._take(name, ("string",), "string", default)
        if node is None:
            return default
        return _value_attr(node)

    def boolean(self, name: str, default=_REQUIRED) -> Optional[bool]:
        node = self._take(name, ("boolean",), "boolean", default)
        if node is None:
            return default
        text = _value_attr(node)
        if text == "true":
            return True
        if text == "false":
            return False
        raise node.fail(f"boolean property {name!r} must be 'true' or 'false', got {text!r}")

    def rgb(self, name: str, default=_REQUIRED):
        node = self._take(name, ("rgb", "float", "integer"), "rgb", default)
        if node is None:
            return default
        return _parse_triple(_value_attr(node), node.line, node.col)

    def point(self, name: str, default=_REQUIRED):
        node = self._take(name, ("point",), "point", default)
        if node is None:
            return default
        return _xyz_attrs(node)

    def vector(self, name: str, default=_REQUIRED):
        node = self._take(name, ("vector",), "vector", default)
        if node is None:
            return default
        return _xyz_attrs(node)

    def float_array(self, name: str, default=_REQUIRED) -> Optional[np.ndarray]:
        node = self._take(name, ("float_array",), "float_array", default)
        if node is None:
            return default
        vals = [_parse_float(t, node.line, node.col) for t in _split_values(_value_attr(node))]
        return np.array(vals, dtype=np.float64)

    def integer_array(self, name: str, default=_REQUIRED) -> Optional[np.ndarray]:
        node = self._take(name, ("integer_array",), "integer_array", default)
        if node is None:
            return default
        vals = [_parse_int(t, node.line, node.col) for t in _split_values(_value_attr(node))]
        return np.array(vals, dtype=np.int64)

    def transform(self, name: str, default=_REQUIRED):
        """Returns (Transform, lookat (origin, target, up) or None)."""
        node = self._take(name, ("transform",), "transform", default)
        if node is None:
            return default
        return _parse_transform(node, self.warnings)

    def warn_unused(self) -> None:
        for name, node in self.by_name.items():
            if name not in self.consumed:
                self.warnings.append(
                    f"ignoring unknown property {name!r} on <{self.node.tag}> "
                    f"(line {node.line}, column {node.col})"
                )


def _warn_attrs(node: _Node, known: tuple, warnings: list[str]) -> None:
    for key in node.attrs:
        if key not in known:
            warnings.append(
                f"ignoring unknown attribute {key!r} on <{node.tag}> "
                f"(line {node.line}, column {node.col})"
            )


def _type_attr(node: _Node) -> str:
    t = node.attrs.get("type")
    if t is None:
        raise node.fail(f"<{node.tag}> needs a type attribute")
    return t


# ---------------------------------------------------------------------------
# Transforms


def _parse_transform(node: _Node, warnings: list[str]):
    """Compose child transforms in listed order; first listed applies first."""
    _warn_attrs(node, ("name",), warnings)
    cur = np.eye(4)
    lookat_raw = None
    for child in node.children:
        if child.tag == "translate":
            _warn_attrs(child, ("x", "y", "z"), warnings)
            step = Transform.translate(*_xyz_attrs(child))
        elif child.tag == "scale":
            _warn_attrs(child, ("value", "x", "y", "z"), warnings)
            if "value" in child.attrs:
                s = _parse_float(child.attrs["value"], child.line, child.col)
                step = Transform.scale(s)
            else:
                step = Transform.scale(*_xyz_attrs(child, default=1.0))
        elif child.tag == "rotate":
            _warn_attrs(child, ("x", "y", "z", "angle"), warnings)
            axis = _xyz_attrs(child)
            if axis == (0.0, 0.0, 0.0):
                raise child.fail("rotate needs a nonzero axis")
            if "angle" not in child.attrs:
                raise child.fail("rotate needs an angle attribute")
            angle = _parse_float(child.attrs["angle"], child.line, child.col)
            step = Transform.rotate(axis, angle)
        elif child.tag == "matrix":
            _warn_attrs(child, ("value",), warnings)
            vals = [
                _parse_float(t, child.line, child.col)
                for t in _split_values(_value_attr(child))
            ]
            if len(vals) != 16:
                raise child.fail(f"matrix needs 16 values, got {len(vals)}")
            step = Transform(np.array(vals, dtype=np.float64).reshape(4, 4))
        elif child.tag == "lookat":
            _warn_attrs(child, ("origin", "target", "up"), warnings)
            for key in ("origin", "target"):
                if key not in child.attrs:
                    raise child.fail(f"lookat needs an {key} attribute")
            origin = _parse_triple(child.attrs["origin"], child.line, child.col)
            target = _parse_triple(child.attrs["target"], child.line, child.col)
            up_text = child.attrs.get("up")
            up = (
                (0.0, 1.0, 0.0)
                if up_text is None
                else _parse_triple(up_text, child.line, child.col)
            )
            try:
                step = Transform.lookat(origin, target, up)
            except SceneValidationError as exc:
                raise child.fail(str(exc)) from None
            if len(node.children) == 1:
                lookat_raw = (origin, target, up)
        else:
            warnings.append(
                f"ignoring unknown transform element <{child.tag}> "
                f"(line {child.line}, column {child.col})"
            )
            continue
        cur = step.m @ cur
    return Transform(cur), lookat_raw


# ---------------------------------------------------------------------------
# Element parsers


def _parse_integrator(node: _Node, warnings: list[str]) -> IntegratorConfig:
    _warn_attrs(node, ("type",), warnings)
    xml_type = _type_attr(node)
    kind = _INTEGRATOR_FROM_XML.get(xml_type)
    if kind is None:
        warnings.append(
            f"unknown integrator type {xml_type!r}, using the path tracer "
            f"(line {node.line}, column {node.col})"
        )
        kind = "pt"
    p = _Props(node, warnings)
    config = IntegratorConfig(
        kind=kind,
        max_depth=p.integer("maxDepth", DEFAULT_MAX_DEPTH),
        rr_start_depth=p.integer("rrDepth", 5),
        photon_count=p.integer("photonCount", 200_000),
        gather_k=p.integer("lookupSize", 50),
        p_large=p.float_("pLarge", 0.3),
        n_chains=p.integer("chains", 64),
        n_bootstrap=p.integer("luminanceSamples", 65_536),
    )
    p.warn_unused()
    for child in p.rest:
        warnings.append(
            f"ignoring unknown element <{child.tag}> inside <integrator> "
            f"(line {child.line}, column {child.col})"
        )
    return config


def _parse_sensor(node: _Node, warnings: list[str]) -> tuple[Camera, int, int]:
    """Returns (camera, spp, seed)."""
    _warn_attrs(node, ("type",), warnings)
    xml_type = _type_attr(node)
    if xml_type != "perspective":
        warnings.append(
            f"unknown sensor type {xml_type!r}, treating it as perspective "
            f"(line {node.line}, column {node.col})"
        )
    p = _Props(node, warnings)
    fov = p.float_("fov", 45.0)
    to_world = p.transform("toWorld", None)
    if to_world is None:
        origin, target, up = (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)
    else:
        t, lookat_raw = to_world
        if lookat_raw is not None:
            origin, target, up = lookat_raw
        else:
            m = t.m
            origin = (m[0, 3], m[1, 3], m[2, 3])
            target = (origin[0] + m[0, 2], origin[1] + m[1, 2], origin[2] + m[2, 2])
            up = (m[0, 1], m[1, 1], m[2, 1])
    width, height = 128, 128
    spp, seed = DEFAULT_SPP, 0
    for child in p.rest:
        if child.tag == "film":
            _warn_attrs(child, ("type",), warnings)
            if _type_attr(child) != "hdrfilm":
                warnings.append(
                    f"unknown film type {child.attrs['type']!r}, using hdrfilm "
                    f"(line {child.line}, column {child.col})"
                )
            fp = _Props(child, warnings)
            width = fp.integer("width", 128)
            height = fp.integer("height", 128)
            fp.warn_unused()
            for sub in fp.rest:
                warnings.append(
                    f"ignoring unknown element <{sub.tag}> inside <film> "
                    f"(line {sub.line}, column {sub.col})"
                )
        elif child.tag == "sampler":
            _warn_attrs(child, ("type",), warnings)
            if _type_attr(child) != "independent":
                warnings.append(
                    f"unknown sampler type {child.attrs['type']!r}, using an "
                    f"independent sampler (line {child.line}, column {child.col})"
                )
            sp = _Props(child, warnings)
            spp = sp.integer("sampleCount", DEFAULT_SPP)
            seed = sp.integer("seed", 0)
            sp.warn_unused()
        else:
            warnings.append(
                f"ignoring unknown element <{child.tag}> inside <sensor> "
                f"(line {child.line}, column {child.col})"
            )
    p.warn_unused()
    camera = Camera(origin, target, up, fov, width, height)
    return camera, spp, seed


def _parse_bsdf(node: _Node, warnings: list[str]) -> Material:
    xml_type = _type_attr(node)
    _warn_attrs(node, ("type", "id"), warnings)
    p = _Props(node, warnings)
    if xml_type == "diffuse":
        mat = Diffuse(p.rgb("reflectance", _GRAY))
    elif xml_type in ("conductor", "roughconductor"):
        preset = copper()
        default_alpha = 0.1 if xml_type == "roughconductor" else 0.0
        mat = Conductor(
            eta=p.rgb("eta", preset.eta),
            k=p.rgb("k", preset.k),
            roughness=p.float_("alpha", default_alpha),
        )
    elif xml_type in ("dielectric", "roughdielectric"):
        default_alpha = 0.1 if xml_type == "roughdielectric" else 0.0
        mat = Dielectric(
            int_ior=p.float_("intIOR", 1.5046),
            ext_ior=p.float_("extIOR", 1.000277),
            roughness=p.float_("alpha", default_alpha),
        )
    elif xml_type == "plastic":
        sss_a = p.rgb("sssSigmaA", None)
        sss_s = p.rgb("sssSigmaS", None)
        sss_eta = p.float_("sssEta", 1.3)
        if (sss_a is None) != (sss_s is None):
            raise node.fail("plastic subsurface needs both sssSigmaA and sssSigmaS")
        sss = None if sss_a is None else DipoleModel(sss_a, sss_s, sss_eta)
        mat = Plastic(
            diffuse_reflectance=p.rgb("diffuseReflectance", _GRAY),
            ior=p.float_("intIOR", 1.49),
            sss=sss,
        )
    elif xml_type == "null":
        mat = Null()
    else:
        warnings.append(
            f"unknown bsdf type {xml_type!r}, substituting gray diffuse "
            f"(line {node.line}, column {node.col})"
        )
        return Diffuse(_GRAY)
    p.warn_unused()
    for child in p.rest:
        warnings.append(
            f"ignoring unknown element <{child.tag}> inside <bsdf> "
            f"(line {child.line}, column {child.col})"
        )
    return mat


def _parse_medium(node: _Node, warnings: list[str]) -> HomogeneousMedium:
    xml_type = _type_attr(node)
    _warn_attrs(node, ("type", "id", "name"), warnings)
    if xml_type != "homogeneous":
        raise node.fail(f"unknown medium type {xml_type!r}")
    p = _Props(node, warnings)
    medium = HomogeneousMedium(
        sigma_a=p.rgb("sigmaA", (0.0, 0.0, 0.0)),
        sigma_s=p.rgb("sigmaS", (0.0, 0.0, 0.0)),
    )
    p.warn_unused()
    return medium


def _axis_aligned_box(t: Transform, node: _Node) -> Box:
    """Lower a transformed [-1,1]^3 cube to an axis-aligned box."""
    a = t.m[:3, :3]
    scale = np.abs(a).max()
    if scale == 0.0:
        raise node.fail("cube transform is singular")
    for j in range(3):
        if np.count_nonzero(np.abs(a[:, j]) > 1e-12 * scale) != 1:
            raise node.fail(
                "cube transform must be axis-aligned (scale and translation only); "
                "rotated boxes are not supported"
            )
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
        dtype=np.float64,
    )
    world = corners @ a.T + t.m[:3, 3]
    pmin = world.min(axis=0)
    pmax = world.max(axis=0)
    return Box(tuple(float(v) for v in pmin), tuple(float(v) for v in pmax))


def _parse_shape_geometry(node: _Node, p: _Props, base_dir: Path) -> Shape:
    stype = _type_attr(node)
    to_world = p.transform("toWorld", None)
    t = to_world[0] if to_world is not None else None
    try:
        if stype == "sphere":
            radius = p.float_("radius", 1.0)
            if radius <= 0.0:
                raise node.fail(f"sphere radius must be positive, got {radius}")
            geom = Sphere(p.point("center", (0.0, 0.0, 0.0)), radius)
            if t is not None:
                geom = geom.transformed(t)
        elif stype == "quad":
            geom = Quad(p.point("corner"), p.vector("e1"), p.vector("e2"))
            if t is not None:
                geom = geom.transformed(t)
        elif stype == "rectangle":
            if t is None:
                t = Transform.identity()
            geom = Quad((-1.0, -1.0, 0.0), (2.0, 0.0, 0.0), (0.0, 2.0, 0.0)).transformed(t)
        elif stype == "box":
            if t is not None:
                raise node.fail("box does not accept a transform; use cube")
            geom = Box(p.point("min"), p.point("max"))
            for k in range(3):
                if not geom.pmin[k] < geom.pmax[k]:
                    raise node.fail("box needs min < max on every axis")
        elif stype == "cube":
            geom = _axis_aligned_box(t if t is not None else Transform.identity(), node)
        elif stype == "trimesh":
            positions = p.float_array("positions")
            indices = p.integer_array("indices")
            normals = p.float_array("normals", None)
            if positions.size % 3 != 0:
                raise node.fail("positions length must be a multiple of 3")
            if indices.size % 3 != 0:
                raise node.fail("indices length must be a multiple of 3")
            if normals is not None and normals.size != positions.size:
                raise node.fail("normals must match positions in length")
            geom = TriMesh(
                positions.reshape(-1, 3),
                indices.reshape(-1, 3),
                None if normals is None else normals.reshape(-1, 3),
            )
            if t is not None:
                geom = geom.transformed(t)
        elif stype == "obj":
            filename = p.string("filename")
            path = base_dir / filename
            try:
                geom = load_obj(path)
            except OSError as exc:
                raise node.fail(f"cannot read OBJ file {str(path)!r}: {exc}") from None
            if t is not None:
                geom = geom.transformed(t)
        else:
            raise node.fail(f"unknown shape type {stype!r}")
    except SceneValidationError as exc:
        raise node.fail(str(exc)) from None
    return geom


class _IdTable:
    """One shared id namespace for bsdf and medium definitions."""

    def __init__(self):
        self.entries: dict[str, tuple[str, int]] = {}

    def define(self, node: _Node, kind: str, index: int) -> None:
        id_ = node.attrs.get("id")
        if id_ is None:
            return
        if id_ in self.entries:
            raise node.fail(f"duplicate id {id_!r}")
        self.entries[id_] = (kind, index)

    def resolve(self, node: _Node, want: str) -> int:
        id_ = node.attrs.get("id")
        if id_ is None:
            raise node.fail("<ref> needs an id attribute")
        entry = self.entries.get(id_)
        if entry is None:
            raise node.fail(f"reference to undefined id {id_!r}")
        kind, index = entry
        if kind != want:
            raise node.fail(f"id {id_!r} names a {kind}, expected a {want}")
        return index


class _Assembler:
    """Accumulates scene lists while walking the document."""

    def __init__(self, base_dir: Path):
        self.base_dir = base_dir
        self.materials: list[Material] = []
        self.media: list[HomogeneousMedium] = []
        self.emitters: list[Emitter] = []
        self.shapes: list[ShapeEntry] = []
        self.warnings: list[str] = []
        self.ids = _IdTable()
        self._default_material: Optional[int] = None

    def add_material(self, node: _Node) -> int:
        mat = _parse_bsdf(node, self.warnings)
        self.materials.append(mat)
        index = len(self.materials) - 1
        self.ids.define(node, "bsdf", index)
        return index

    def add_medium(self, node: _Node) -> int:
        medium = _parse_medium(node, self.warnings)
        self.media.append(medium)
        index = len(self.media) - 1
        self.ids.define(node, "medium", index)
        return index

    def default_material(self) -> int:
        if self._default_material is None:
            self.materials.append(Diffuse(_GRAY))
            self._default_material = len(self.materials) - 1
        return self._default_material

    def add_shape(self, node: _Node) -> None:
        _warn_attrs(node, ("type", "id"), self.warnings)
        p = _Props(node, self.warnings)
        geom = _parse_shape_geometry(node, p, self.base_dir)
        p.warn_unused()
        material: Optional[int] = None
        emitter: Optional[int] = None
        interior: Optional[int] = None
        exterior: Optional[int] = None
        for child in p.rest:
            if child.tag == "ref":
                slot = child.attrs.get("name")
                _warn_attrs(child, ("name", "id"), self.warnings)
                if slot is None:
                    if material is not None:
                        raise child.fail("shape already has a material")
                    material = self.ids.resolve(child, "bsdf")
                elif slot in ("interior", "exterior"):
                    index = self.ids.resolve(child, "medium")
                    if slot == "interior":
                        interior = index
                    else:
                        exterior = index
                else:
                    raise child.fail(
                        f"unknown ref slot {slot!r}; expected no name, 'interior', "
                        f"or 'exterior'"
                    )
            elif child.tag == "bsdf":
                if material is not None:
                    raise child.fail("shape already has a material")
                material = self.add_material(child)
            elif child.tag == "medium":
                slot = child.attrs.get("name")
                if slot not in ("interior", "exterior"):
                    raise child.fail(
                        "inline medium needs name='interior' or name='exterior'"
                    )
                index = self.add_medium(child)
                if slot == "interior":
                    interior = index
                else:
                    exterior = index
            elif child.tag == "emitter":
                if emitter is not None:
                    raise child.fail("shape already has an emitter")
                _warn_attrs(child, ("type",), self.warnings)
                if _type_attr(child) != "area":
                    raise child.fail(
                        f"only area emitters attach to shapes, got "
                        f"{child.attrs['type']!r}"
                    )
                if not isinstance(geom, (Sphere, Quad)):
                    raise child.fail(
                        f"area emitters support sphere and quad shapes, got "
                        f"{type(geom).__name__}"
                    )
                ep = _Props(child, self.warnings)
                self.emitters.append(AreaEmitter(ep.rgb("radiance", (1.0, 1.0, 1.0)), geom))
                ep.warn_unused()
                emitter = len(self.emitters) - 1
            else:
                self.warnings.append(
                    f"ignoring unknown element <{child.tag}> inside <shape> "
                    f"(line {child.line}, column {child.col})"
                )
        if material is None:
            material = self.default_material()
        self.shapes.append(ShapeEntry(geom, material, emitter, interior, exterior))

    def add_world_emitter(self, node: _Node) -> None:
        _warn_attrs(node, ("type", "id"), self.warnings)
        etype = _type_attr(node)
        p = _Props(node, self.warnings)
        if etype == "constant":
            em: Emitter = ConstantEnvEmitter(p.rgb("radiance", (1.0, 1.0, 1.0)))
        elif etype == "spot":
            cutoff = p.float_("cutoffAngle", 20.0)
            em = SpotEmitter(
                intensity=p.rgb("intensity", (1.0, 1.0, 1.0)),
                position=p.point("position"),
                direction=p.vector("direction"),
                cutoff_deg=cutoff,
                beam_deg=p.float_("beamWidth", cutoff * 0.75),
            )
        elif etype == "directional":
            em = DirectionalEmitter(
                irradiance=p.rgb("irradiance", (1.0, 1.0, 1.0)),
                direction=p.vector("direction"),
            )
        elif etype == "area":
            raise node.fail("area emitters must be nested inside a shape")
        else:
            raise node.fail(f"unknown emitter type {etype!r}")
        p.warn_unused()
        self.emitters.append(em)


def parse_scene(text: Union[str, bytes], base_dir=".") -> SceneDescription:
    """Parse an XML scene document into a validated SceneDescription.

    base_dir anchors relative resource paths (OBJ files). All failures raise
    SceneFormatError (with source line/column where known) or
    SceneValidationError; no input text escapes with a raw exception.
    """
    root = _build_dom(text)
    asm = _Assembler(Path(base_dir))
    try:
        if root.tag != "scene":
            raise root.fail(f"expected <scene> document element, got <{root.tag}>")
        version = root.attrs.get("version")
        if version is not None and version != SCENE_VERSION:
            asm.warnings.append(
                f"scene version {version!r} is not {SCENE_VERSION}; parsing anyway "
                f"(line {root.line}, column {root.col})"
            )
        _warn_attrs(root, ("version",), asm.warnings)

        integrator: Optional[IntegratorConfig] = None
        sensor: Optional[tuple[Camera, int, int]] = None
        for child in root.children:
            if child.tag == "integrator":
                if integrator is not None:
                    raise child.fail("scene has more than one integrator")
                integrator = _parse_integrator(child, asm.warnings)
            elif child.tag == "sensor":
                if sensor is not None:
                    raise child.fail("scene has more than one sensor")
                sensor = _parse_sensor(child, asm.warnings)
            elif child.tag == "bsdf":
                asm.add_material(child)
            elif child.tag == "medium":
                asm.add_medium(child)
            elif child.tag == "shape":
                asm.add_shape(child)
            elif child.tag == "emitter":
                asm.add_world_emitter(child)
            else:
                asm.warnings.append(
                    f"ignoring unknown element <{child.tag}> "
                    f"(line {child.line}, column {child.col})"
                )
        if sensor is None:
            raise SceneFormatError(
                "missing camera: scene has no <sensor> element", root.line, root.col
            )
    except RaylabError:
        raise
    except (ValueError, TypeError, KeyError, IndexError, OverflowError) as exc:
        # Parser totality: unexpected shapes of bad input still come back
        # as a structured error instead of an internal traceback.
        raise SceneFormatError(f"unsupported construct: {exc}") from exc

    camera, spp, seed = sensor
    desc = SceneDescription(
        camera=camera,
        integrator=integrator if integrator is not None else IntegratorConfig(),
        shapes=asm.shapes,
        materials=asm.materials,
        emitters=asm.emitters,
        media=asm.media,
        seed=seed,
        spp=spp,
        warnings=asm.warnings,
    )
    validate_scene(desc)
    return desc


def load_scene(path) -> SceneDescription:
    path = Path(path)
    return parse_scene(path.read_text(encoding="utf-8"), base_dir=path.parent)


# ---------------------------------------------------------------------------
# Canonical serializer


def _fmt_float(x) -> str:
    return repr(float(x))


def _fmt_triple(v) -> str:
    return f"{_fmt_float(v[0])}, {_fmt_float(v[1])}, {_fmt_float(v[2])}"


class _Writer:
    def __init__(self):
        self.lines: list[str] = ['<?xml version="1.0" encoding="utf-8"?>']
        self.depth = 0

    def line(self, text: str) -> None:
        self.lines.append("    " * self.depth + text)

    def open(self, text: str) -> None:
        self.line(text)
        self.depth += 1

    def close(self, tag: str) -> None:
        self.depth -= 1
        self.line(f"</{tag}>")

    def prop_int(self, name: str, value: int) -> None:
        self.line(f'<integer name="{name}" value="{int(value)}"/>')

    def prop_float(self, name: str, value: float) -> None:
        self.line(f'<float name="{name}" value="{_fmt_float(value)}"/>')

    def prop_rgb(self, name: str, value) -> None:
        self.line(f'<rgb name="{name}" value="{_fmt_triple(value)}"/>')

    def prop_xyz(self, tag: str, name: str, v) -> None:
        self.line(
            f'<{tag} name="{name}" x="{_fmt_float(v[0])}" y="{_fmt_float(v[1])}" '
            f'z="{_fmt_float(v[2])}"/>'
        )

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _write_material(w: _Writer, mat: Material, id_: str) -> None:
    if isinstance(mat, Diffuse):
        w.open(f'<bsdf type="diffuse" id="{id_}">')
        w.prop_rgb("reflectance", mat.reflectance)
        w.close("bsdf")
    elif isinstance(mat, Conductor):
        tag = "roughconductor" if mat.roughness > 0.0 else "conductor"
        w.open(f'<bsdf type="{tag}" id="{id_}">')
        w.prop_rgb("eta", mat.eta)
        w.prop_rgb("k", mat.k)
        if mat.roughness > 0.0:
            w.prop_float("alpha", mat.roughness)
        w.close("bsdf")
    elif isinstance(mat, Dielectric):
        tag = "roughdielectric" if mat.roughness > 0.0 else "dielectric"
        w.open(f'<bsdf type="{tag}" id="{id_}">')
        w.prop_float("intIOR", mat.int_ior)
        w.prop_float("extIOR", mat.ext_ior)
        if mat.roughness > 0.0:
            w.prop_float("alpha", mat.roughness)
        w.close("bsdf")
    elif isinstance(mat, Plastic):
        w.open(f'<bsdf type="plastic" id="{id_}">')
        w.prop_rgb("diffuseReflectance", mat.diffuse_reflectance)
        w.prop_float("intIOR", mat.ior)
        if mat.sss is not None:
            w.prop_rgb("sssSigmaA", mat.sss.sigma_a)
            w.prop_rgb("sssSigmaS", mat.sss.sigma_s)
            w.prop_float("sssEta", mat.sss.eta)
        w.close("bsdf")
    elif isinstance(mat, Null):
        w.line(f'<bsdf type="null" id="{id_}"/>')
    else:
        raise SceneValidationError(f"cannot serialize material {type(mat).__name__}")


_SHAPE_TAGS = {Sphere: "sphere", Quad: "quad", Box: "box", TriMesh: "trimesh"}


def _write_geometry(w: _Writer, geom: Shape) -> None:
    if isinstance(geom, Sphere):
        w.prop_xyz("point", "center", geom.center)
        w.prop_float("radius", geom.radius)
    elif isinstance(geom, Quad):
        w.prop_xyz("point", "corner", geom.corner)
        w.prop_xyz("vector", "e1", geom.e1)
        w.prop_xyz("vector", "e2", geom.e2)
    elif isinstance(geom, Box):
        w.prop_xyz("point", "min", geom.pmin)
        w.prop_xyz("point", "max", geom.pmax)
    elif isinstance(geom, TriMesh):
        pos = " ".join(_fmt_float(v) for v in geom.positions.ravel())
        idx = " ".join(str(int(v)) for v in geom.faces.ravel())
        w.line(f'<float_array name="positions" value="{pos}"/>')
        w.line(f'<integer_array name="indices" value="{idx}"/>')
        if geom.normals is not None:
            nrm = " ".join(_fmt_float(v) for v in geom.normals.ravel())
            w.line(f'<float_array name="normals" value="{nrm}"/>')
    else:
        raise SceneValidationError(f"cannot serialize shape {type(geom).__name__}")


def serialize_scene(desc: SceneDescription) -> str:
    """Canonical XML form of a scene; deterministic and parseable back.

    Element order is fixed (integrator, sensor, materials, media, shapes,
    world emitters), ids are generated as m0.. and med0.., area emitters are
    written inline in their shape. Area emitters not referenced by exactly
    one shape cannot be expressed in the format and raise.
    """
    area_owner: dict[int, int] = {}
    for s, entry in enumerate(desc.shapes):
        if entry.emitter is not None:
            if entry.emitter in area_owner:
                raise SceneValidationError(
                    f"emitter {entry.emitter} is attached to more than one shape"
                )
            area_owner[entry.emitter] = s
    for e, em in enumerate(desc.emitters):
        if isinstance(em, AreaEmitter) and e not in area_owner:
            raise SceneValidationError(
                f"area emitter {e} is not attached to any shape; it cannot be "
                f"serialized"
            )

    w = _Writer()
    w.open(f'<scene version="{SCENE_VERSION}">')

    cfg = desc.integrator
    w.open(f'<integrator type="{_INTEGRATOR_TO_XML[cfg.kind]}">')
    w.prop_int("maxDepth", cfg.max_depth)
    w.prop_int("rrDepth", cfg.rr_start_depth)
    w.prop_int("photonCount", cfg.photon_count)
    w.prop_int("lookupSize", cfg.gather_k)
    w.prop_float("pLarge", cfg.p_large)
    w.prop_int("chains", cfg.n_chains)
    w.prop_int("luminanceSamples", cfg.n_bootstrap)
    w.close("integrator")

    cam = desc.camera
    w.open('<sensor type="perspective">')
    w.prop_float("fov", cam.fov_y_deg)
    w.open('<transform name="toWorld">')
    w.line(
        f'<lookat origin="{_fmt_triple(cam.origin)}" '
        f'target="{_fmt_triple(cam.target)}" up="{_fmt_triple(cam.up)}"/>'
    )
    w.close("transform")
    w.open('<film type="hdrfilm">')
    w.prop_int("width", cam.width)
    w.prop_int("height", cam.height)
    w.close("film")
    w.open('<sampler type="independent">')
    w.prop_int("sampleCount", desc.spp)
    w.prop_int("seed", desc.seed)
    w.close("sampler")
    w.close("sensor")

    for i, mat in enumerate(desc.materials):
        _write_material(w, mat, f"m{i}")
    for i, medium in enumerate(desc.media):
        w.open(f'<medium type="homogeneous" id="med{i}">')
        w.prop_rgb("sigmaA", medium.sigma_a)
        w.prop_rgb("sigmaS", medium.sigma_s)
        w.close("medium")

    for entry in desc.shapes:
        tag = _SHAPE_TAGS.get(type(entry.shape))
        if tag is None:
            raise SceneValidationError(
                f"cannot serialize shape {type(entry.shape).__name__}"
            )
        w.open(f'<shape type="{tag}">')
        _write_geometry(w, entry.shape)
        w.line(f'<ref id="m{entry.material}"/>')
        if entry.interior_medium is not None:
            w.line(f'<ref name="interior" id="med{entry.interior_medium}"/>')
        if entry.exterior_medium is not None:
            w.line(f'<ref name="exterior" id="med{entry.exterior_medium}"/>')
        if entry.emitter is not None:
            em = desc.emitters[entry.emitter]
            w.open('<emitter type="area">')
            w.prop_rgb("radiance", em.radiance)
            w.close("emitter")
        w.close("shape")

    for em in desc.emitters:
        if isinstance(em, AreaEmitter):
            continue
        if isinstance(em, ConstantEnvEmitter):
            w.open('<emitter type="constant">')
            w.prop_rgb("radiance", em.radiance)
            w.close("emitter")
        elif isinstance(em, SpotEmitter):
            w.open('<emitter type="spot">')
            w.prop_rgb("intensity", em.intensity)
            w.prop_xyz("point", "position", em.position)
            w.prop_xyz("vector", "direction", em.direction)
            w.prop_float("cutoffAngle", em.cutoff_deg)
            w.prop_float("beamWidth", em.beam_deg)
            w.close("emitter")
        elif isinstance(em, DirectionalEmitter):
            w.open('<emitter type="directional">')
            w.prop_rgb("irradiance", em.irradiance)
            w.prop_xyz("vector", "direction", em.direction)
            w.close("emitter")
        else:
            raise SceneValidationError(
                f"cannot serialize emitter {type(em).__name__}"
            )

    w.close("scene")
    return w.text()


def save_scene(desc: SceneDescription, path) -> None:
    Path(path).write_text(serialize_scene(desc), encoding="utf-8")
