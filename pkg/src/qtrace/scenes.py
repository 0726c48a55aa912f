"""Scene files and the built-in procedural scene families.

Scene files are YAML::

    world_bits: 5
    camera: {position: [8, 8, 29], look_at: [8, 8, 0], fov: 60, resolution: [128, 128]}
    primitives:
      - {min: [0, 0, 0], max: [16, 0, 16], albedo: [0.8, 0.8, 0.8]}
      - {min: [1, 3, 3], max: [1, 12, 12], albedo: [0.9, 0.9, 0.9], mirror: true}
    lights:
      - {type: point, position: [5.5, 14.0, 9.5], intensity: [0.6, 0.6, 0.6]}
      - {type: rect, min: [6, 15, 6], max: [10, 15, 10], intensity: [4, 4, 4]}
      - {type: directional, direction: [0, -1, 0], intensity: [1, 1, 1]}

The pseudo-paths ``gen:qornell:<N>`` and ``gen:depth:<N>`` name generated scenes.
"""
from __future__ import annotations

import colorsys
from pathlib import Path
from typing import Any

import yaml

from .geometry import (
    Camera,
    DirectionalLight,
    Material,
    PointLight,
    RectLight,
    Scene,
    ScenePrimitive,
)
from .qcore import ConfigurationError


class SceneError(ConfigurationError):
    """Malformed or invalid scene description."""


# -- loading -------------------------------------------------------------------

def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _mapping(node: yaml.Node, what: str) -> dict[str, yaml.Node]:
    if not isinstance(node, yaml.MappingNode):
        raise SceneError(f"line {_line(node)}: {what} must be a mapping")
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise SceneError(f"line {_line(k)}: keys must be scalars")
        out[k.value] = v
    return out


def _scalar(node: yaml.Node, kind, what: str):
    if not isinstance(node, yaml.ScalarNode):
        raise SceneError(f"line {_line(node)}: {what} must be a scalar")
    value = yaml.safe_load(node.value) if node.value else None
    if kind is bool:
        if not isinstance(value, bool):
            raise SceneError(f"line {_line(node)}: {what} must be true or false")
        return value
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SceneError(f"line {_line(node)}: {what} must be an integer")
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SceneError(f"line {_line(node)}: {what} must be a number")
        return float(value)
    return value


def _vector(node: yaml.Node, kind, what: str, length: int = 3) -> tuple:
    if not isinstance(node, yaml.SequenceNode) or len(node.value) != length:
        raise SceneError(f"line {_line(node)}: {what} must be a list of {length} values")
    return tuple(_scalar(v, kind, what) for v in node.value)


def _require(fields: dict, key: str, owner: yaml.Node, what: str) -> yaml.Node:
    if key not in fields:
        raise SceneError(f"line {_line(owner)}: {what} is missing '{key}'")
    return fields[key]


def _check_keys(fields: dict, allowed: set, owner: yaml.Node, what: str) -> None:
    extra = sorted(set(fields) - allowed)
    if extra:
        raise SceneError(f"line {_line(owner)}: unknown {what} field(s): {', '.join(extra)}")


def _load_primitive(i: int, node: yaml.Node) -> ScenePrimitive:
    f = _mapping(node, "primitive")
    _check_keys(f, {"min", "max", "albedo", "mirror", "emissive"}, node, "primitive")
    lo = _vector(_require(f, "min", node, "primitive"), int, "min")
    hi = _vector(_require(f, "max", node, "primitive"), int, "max")
    albedo = _vector(f["albedo"], float, "albedo") if "albedo" in f else (0.8, 0.8, 0.8)
    if not all(0.0 <= c <= 1.0 for c in albedo):
        raise SceneError(f"line {_line(f['albedo'])}: albedo components must lie in [0, 1]")
    mirror = _scalar(f["mirror"], bool, "mirror") if "mirror" in f else False
    emissive = None
    if "emissive" in f and not (isinstance(f["emissive"], yaml.ScalarNode)
                                and f["emissive"].value in ("", "null", "~")):
        emissive = _vector(f["emissive"], float, "emissive")
    try:
        return ScenePrimitive(i, lo, hi, Material(albedo, mirror, emissive))
    except ConfigurationError as exc:
        raise SceneError(f"line {_line(node)}: {exc}") from None


def _load_light(node: yaml.Node):
    f = _mapping(node, "light")
    kind = _scalar(_require(f, "type", node, "light"), str, "type")
    intensity = _vector(f["intensity"], float, "intensity") if "intensity" in f else (1.0, 1.0, 1.0)
    if kind == "point":
        _check_keys(f, {"type", "position", "intensity"}, node, "light")
        return PointLight(_vector(_require(f, "position", node, "point light"), float, "position"),
                          intensity)
    if kind == "rect":
        _check_keys(f, {"type", "min", "max", "intensity"}, node, "light")
        lo = _vector(_require(f, "min", node, "rect light"), int, "min")
        hi = _vector(_require(f, "max", node, "rect light"), int, "max")
        if sum(a == b for a, b in zip(lo, hi)) != 1 or any(a > b for a, b in zip(lo, hi)):
            raise SceneError(f"line {_line(node)}: rect light needs exactly one flat axis")
        return RectLight(lo, hi, intensity)
    if kind == "directional":
        _check_keys(f, {"type", "direction", "intensity"}, node, "light")
        d = _vector(_require(f, "direction", node, "directional light"), float, "direction")
        if not any(d):
            raise SceneError(f"line {_line(node)}: light direction must be non-zero")
        return DirectionalLight(d, intensity)
    raise SceneError(f"line {_line(node)}: unknown light type {kind!r}")


def _load_camera(node: yaml.Node) -> Camera:
    f = _mapping(node, "camera")
    _check_keys(f, {"position", "look_at", "fov", "resolution"}, node, "camera")
    pos = _vector(_require(f, "position", node, "camera"), int, "position")
    look = _vector(_require(f, "look_at", node, "camera"), float, "look_at")
    fov = _scalar(f["fov"], float, "fov") if "fov" in f else 60.0
    if not 0.0 < fov < 180.0:
        raise SceneError(f"line {_line(f['fov'])}: fov must lie in (0, 180)")
    res = _vector(f["resolution"], int, "resolution", 2) if "resolution" in f else (128, 128)
    if min(res) < 1:
        raise SceneError(f"line {_line(f['resolution'])}: resolution must be positive")
    if tuple(float(c) for c in pos) == look:
        raise SceneError(f"line {_line(node)}: camera position equals look_at")
    return Camera(pos, look, fov, res)


def parse_scene(text: str, name: str = "scene") -> Scene:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise SceneError(f"{where}invalid YAML ({getattr(exc, 'problem', exc)})") from None
    if root is None:
        raise SceneError("line 1: empty scene file")
    top = _mapping(root, "scene")
    _check_keys(top, {"world_bits", "camera", "primitives", "lights", "name"}, root, "scene")
    cb = _scalar(_require(top, "world_bits", root, "scene"), int, "world_bits")
    if not 1 <= cb <= 30:
        raise SceneError(f"line {_line(top['world_bits'])}: world_bits must lie in [1, 30]")
    prims_node = top.get("primitives")
    prims = []
    if prims_node is not None and not (isinstance(prims_node, yaml.ScalarNode)
                                       and prims_node.value in ("", "null", "~")):
        if not isinstance(prims_node, yaml.SequenceNode):
            raise SceneError(f"line {_line(prims_node)}: primitives must be a list")
        prims = [_load_primitive(i, n) for i, n in enumerate(prims_node.value)]
        for p, n in zip(prims, prims_node.value):
            for c in p.bounds_min + p.bounds_max:
                if not 0 <= c < 1 << cb:
                    raise SceneError(
                        f"line {_line(n)}: coordinate {c} outside [0, {1 << cb})")
    lights = []
    if "lights" in top and isinstance(top["lights"], yaml.SequenceNode):
        lights = [_load_light(n) for n in top["lights"].value]
    elif "lights" in top and top["lights"].value not in ("", "null", "~", []):
        raise SceneError(f"line {_line(top['lights'])}: lights must be a list")
    camera = _load_camera(top["camera"]) if "camera" in top else None
    if "name" in top:
        name = str(_scalar(top["name"], str, "name"))
    return Scene(cb, prims, lights, camera, name)


def load_scene(path: str) -> Scene:
    """Load a scene file, or build a generated scene from ``gen:<family>:<N>``."""
    if path.startswith("gen:"):
        return generated_scene(path)
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read scene file {path}: {exc.strerror}") from None
    return parse_scene(text, name=p.stem)


def _light_dict(light) -> dict:
    if isinstance(light, PointLight):
        return {"type": "point", "position": list(light.position),
                "intensity": list(light.intensity)}
    if isinstance(light, RectLight):
        return {"type": "rect", "min": list(light.bounds_min), "max": list(light.bounds_max),
                "intensity": list(light.intensity)}
    return {"type": "directional", "direction": list(light.direction),
            "intensity": list(light.intensity)}


def dump_scene(scene: Scene) -> str:
    doc: dict[str, Any] = {"name": scene.name, "world_bits": scene.cb}
    if scene.camera is not None:
        c = scene.camera
        doc["camera"] = {"position": list(c.position), "look_at": list(c.look_at),
                         "fov": c.fov, "resolution": list(c.resolution)}
    prims = []
    for p in scene.primitives:
        d = {"min": list(p.bounds_min), "max": list(p.bounds_max),
             "albedo": [round(a, 6) for a in p.material.albedo]}
        if p.material.mirror:
            d["mirror"] = True
        if p.material.emissive is not None:
            d["emissive"] = list(p.material.emissive)
        prims.append(d)
    doc["primitives"] = prims
    doc["lights"] = [_light_dict(l) for l in scene.lights]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# -- generated scenes ------------------------------------------------------------

FAMILIES = ("qornell", "depth")


def generated_scene(spec: str) -> Scene:
    parts = spec.split(":")
    if len(parts) != 3 or parts[0] != "gen":
        raise SceneError(f"generated scene must look like gen:<family>:<N>, got {spec!r}")
    family, count = parts[1], parts[2]
    try:
        n = int(count)
    except ValueError:
        raise SceneError(f"primitive count must be an integer, got {count!r}") from None
    if family == "qornell":
        return qornell(n)
    if family == "depth":
        return depth_complexity(n)
    raise SceneError(f"unknown scene family {family!r} (known: {', '.join(FAMILIES)})")


def _rect(lo, hi) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    return tuple(int(c) for c in lo), tuple(int(c) for c in hi)


def _fillers(count: int, planes: tuple[int, ...], extent: int) -> list[tuple]:
    """Unit squares on z-planes behind the camera; no camera, mirror or shadow ray reaches them."""
    out = []
    for z in planes:
        for y in range(extent - 1):
            for x in range(extent - 1):
                if len(out) == count:
                    return out
                out.append(_rect((x, y, z), (x + 1, y + 1, z)))
    if len(out) < count:
        raise SceneError(f"cannot place {count} filler primitives")
    return out


WHITE = (0.75, 0.75, 0.75)
RED = (0.75, 0.15, 0.12)
GREEN = (0.15, 0.65, 0.2)
MIRROR = (0.9, 0.9, 0.9)
FILLER = (0.5, 0.5, 0.5)


def qornell(n: int, resolution: tuple[int, int] = (128, 128)) -> Scene:
    """Box room with a mirror panel on the left wall and two blocks.

    For n >= 14 exactly 14 primitives are visible and the rest are fillers
    placed where no traced ray can reach them; n = 8 is a reduced room.
    """
    if n < 8:
        raise SceneError("qornell scenes need at least 8 primitives")
    walls = [
        (_rect((0, 0, 0), (16, 0, 16)), WHITE, False),      # floor
        (_rect((0, 16, 0), (16, 16, 16)), WHITE, False),    # ceiling
        (_rect((0, 0, 0), (16, 16, 0)), WHITE, False),      # back
        (_rect((0, 0, 0), (0, 16, 16)), RED, False),        # left
        (_rect((16, 0, 0), (16, 16, 16)), GREEN, False),    # right
        (_rect((1, 3, 3), (1, 12, 12)), MIRROR, True),      # mirror panel
    ]
    short_block = [
        (_rect((3, 4, 4), (7, 4, 8)), WHITE, False),        # top
        (_rect((3, 0, 8), (7, 4, 8)), WHITE, False),        # front
        (_rect((7, 0, 4), (7, 4, 8)), WHITE, False),        # right
        (_rect((3, 0, 4), (3, 4, 8)), WHITE, False),        # left
    ]
    tall_block = [
        (_rect((10, 9, 2), (14, 9, 6)), WHITE, False),
        (_rect((10, 0, 6), (14, 9, 6)), WHITE, False),
        (_rect((10, 0, 2), (10, 9, 6)), WHITE, False),
        (_rect((14, 0, 2), (14, 9, 6)), WHITE, False),
    ]
    visible = walls + short_block + tall_block if n >= 14 else walls + short_block[:2]
    prims = [ScenePrimitive(i, lo, hi, Material(alb, mir))
             for i, ((lo, hi), alb, mir) in enumerate(visible)]
    for lo, hi in _fillers(n - len(prims), (30, 31), 32):
        prims.append(ScenePrimitive(len(prims), lo, hi, Material(FILLER)))
    lights = [
        PointLight((5.5, 14.0, 10.5), (0.55, 0.55, 0.5)),
        PointLight((11.5, 14.0, 10.5), (0.5, 0.5, 0.55)),
    ]
    camera = Camera((8, 8, 29), (8.0, 8.0, 0.0), 60.0, resolution)
    return Scene(5, prims, lights, camera, f"qornell-{n}")


def qornell_area(n: int, resolution: tuple[int, int] = (128, 128)) -> Scene:
    """The qornell room lit by a single ceiling rectangle instead of point lights."""
    s = qornell(n, resolution)
    return Scene(s.cb, s.primitives, [RectLight((5, 15, 5), (11, 15, 11), (12.0, 12.0, 12.0))],
                 s.camera, f"qornell-area-{n}")


def _palette(i: int) -> tuple[float, float, float]:
    h = (i * 0.6180339887498949) % 1.0
    return tuple(round(c, 4) for c in colorsys.hsv_to_rgb(h, 0.55, 0.9))


DEPTH_VISIBLE = 31


def depth_complexity(n: int, resolution: tuple[int, int] = (128, 128)) -> Scene:
    """Stacked z-layers seen head-on: upper-left quadrant two layers deep,
    lower-right nine deep, the other two quadrants a checkerboard of tiles over
    two backing layers. Every primitive has its own colour."""
    if n < DEPTH_VISIBLE:
        raise SceneError(f"depth scenes need at least {DEPTH_VISIBLE} primitives")
    rects = []
    # upper-left: x in [0, 16], y in [16, 31]
    for z in (14, 4):
        rects.append(_rect((0, 16, z), (16, 31, z)))
    # lower-right: x in [16, 31], y in [0, 16]
    for z in (18, 16, 14, 12, 10, 8, 6, 4, 2):
        rects.append(_rect((16, 0, z), (31, 16, z)))
    # upper-right and lower-left: backing layers plus 8 tiles on a 4x4 board of 2-unit cells
    for (x0, x1, y0, y1), back, tile_z, sx, sy in (
        ((16, 31, 16, 31), (12, 4), 16, 16, 16),
        ((0, 16, 0, 16), (10, 3), 17, 8, 8),
    ):
        for z in back:
            rects.append(_rect((x0, y0, z), (x1, y1, z)))
        for cy in range(4):
            for cx in range(4):
                if (cx + cy) % 2 == 0:
                    x, y = sx + 2 * cx, sy + 2 * cy
                    rects.append(_rect((x, y, tile_z), (x + 2, y + 2, tile_z)))
    assert len(rects) == DEPTH_VISIBLE
    prims = [ScenePrimitive(i, lo, hi, Material(_palette(i))) for i, (lo, hi) in enumerate(rects)]
    for lo, hi in _fillers(n - len(prims), (31,), 32):
        prims.append(ScenePrimitive(len(prims), lo, hi, Material(FILLER)))
    lights = [PointLight((16.0, 16.0, 30.0), (1.0, 1.0, 1.0))]
    camera = Camera((16, 16, 30), (16.0, 16.0, 0.0), 50.0, resolution)
    return Scene(5, prims, lights, camera, f"depth-{n}")


def single_layer(resolution: tuple[int, int] = (128, 128)) -> Scene:
    """A 4x4 mosaic of abutting panels on one plane: every ray hits exactly one primitive."""
    prims = []
    for j in range(4):
        for i in range(4):
            lo, hi = _rect((8 * i, 8 * j, 4), (8 * i + 7, 8 * j + 7, 4))
            prims.append(ScenePrimitive(len(prims), lo, hi, Material(_palette(len(prims)))))
    lights = [PointLight((16.0, 16.0, 30.0), (1.0, 1.0, 1.0))]
    camera = Camera((16, 16, 30), (16.0, 16.0, 0.0), 50.0, resolution)
    return Scene(5, prims, lights, camera, "single-layer")
