import numpy as np
import pytest

from qtrace.geometry import PointLight, RectLight
from qtrace.render import RenderConfig, primary_rays, render_scene
from qtrace.scenes import (
    DEPTH_VISIBLE,
    SceneError,
    depth_complexity,
    dump_scene,
    generated_scene,
    load_scene,
    parse_scene,
    qornell,
    qornell_area,
    single_layer,
)

GOOD = """\
world_bits: 4
camera: {position: [4, 4, 15], look_at: [4, 4, 0], fov: 40, resolution: [8, 6]}
primitives:
  - {min: [0, 0, 2], max: [8, 8, 2], albedo: [0.5, 0.5, 0.5]}
  - {min: [1, 1, 5], max: [1, 4, 9], mirror: true}
lights:
  - {type: point, position: [4, 4, 12], intensity: [1, 1, 1]}
  - {type: rect, min: [2, 10, 2], max: [4, 10, 4]}
"""


def test_parse_good_scene():
    s = parse_scene(GOOD)
    assert s.cb == 4 and s.raw_count == 2
    assert s.primitives[1].material.mirror
    assert isinstance(s.lights[0], PointLight) and isinstance(s.lights[1], RectLight)
    assert s.camera.resolution == (8, 6)


def test_round_trip():
    s = parse_scene(GOOD)
    t = parse_scene(dump_scene(s), name="scene")
    assert t.primitives == s.primitives and t.lights == s.lights and t.camera == s.camera


@pytest.mark.parametrize("text,line", [
    (GOOD.replace("[0, 0, 2], max: [8, 8, 2]", "[0, 0, 2], max: [8, 8, 3]"), 4),
    (GOOD.replace("max: [8, 8, 2]", "max: [16, 8, 2]"), 4),
    (GOOD.replace("mirror: true", "mirror: maybe"), 5),
    (GOOD.replace("type: point", "type: spot"), 7),
    (GOOD.replace("fov: 40", "fov: 400"), 2),
    (GOOD.replace("albedo: [0.5, 0.5, 0.5]", "albedo: [0.5, 0.5]"), 4),
    (GOOD + "colour: red\n", 1),
    ("world_bits: 4\nprimitives: [\n", 3),
])
def test_errors_name_the_line(text, line):
    with pytest.raises(SceneError, match=f"line {line}"):
        parse_scene(text)


def test_missing_file():
    with pytest.raises(SceneError, match="cannot read"):
        load_scene("/nonexistent/scene.yaml")


def test_generated_paths():
    assert generated_scene("gen:qornell:64").raw_count == 64
    assert load_scene("gen:depth:32").raw_count == 32
    for bad in ("gen:qornell", "gen:cube:8", "gen:qornell:x", "gen:depth:16"):
        with pytest.raises(SceneError):
            generated_scene(bad)


def _intersected(scene, res=(64, 64)):
    h = primary_rays(scene.camera, res).intersect(scene)
    return set(np.flatnonzero(h.hit.any(axis=0)).tolist()), h


@pytest.mark.parametrize("n", [16, 64, 512])
def test_qornell_fillers_are_never_hit(n):
    scene = qornell(n)
    seen, h = _intersected(scene)
    assert seen == set(range(14))
    assert not h.hit[:, 14:].any()


def test_qornell_small_and_area():
    assert qornell(8).raw_count == 8
    assert _intersected(qornell(8))[0] <= set(range(8))
    area = qornell_area(16)
    assert len(area.lights) == 1 and isinstance(area.lights[0], RectLight)


def test_depth_scene_layers():
    seen, h = _intersected(depth_complexity(64), (128, 128))
    assert seen == set(range(DEPTH_VISIBLE))
    assert h.hit.sum(axis=1).max() >= 9
    assert not h.hit[:, DEPTH_VISIBLE:].any()


def test_depth_image_independent_of_filler_count():
    cfg = RenderConfig(mode="classical", resolution=(32, 32))
    a = render_scene(depth_complexity(32), cfg).image
    b = render_scene(depth_complexity(64), cfg).image
    assert np.array_equal(a, b)


def test_single_layer_one_hit_per_ray():
    scene = single_layer()
    _, h = _intersected(scene)
    assert h.hit.sum(axis=1).max() == 1
