import numpy as np
import pytest

from qtrace.cli import (
    encode_ppm,
    estimate_table,
    format_sweep_csv,
    loglog_slope,
    main,
    parse_report,
    read_image,
    run_sweep,
)
from qtrace.render import RenderConfig


def test_ppm_one_white_pixel():
    assert encode_ppm(np.full((1, 1, 3), 255, np.uint8)) == b"P6\n1 1\n255\n\xff\xff\xff"


def test_ppm_rejects_empty_image():
    with pytest.raises(ValueError):
        encode_ppm(np.zeros((0, 4, 3), np.uint8))


def test_ppm_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    p = tmp_path / "a.ppm"
    p.write_bytes(encode_ppm(img))
    assert np.array_equal(read_image(p), img)


def _render(tmp_path, *extra, name="r"):
    out, rep = tmp_path / f"{name}.ppm", tmp_path / f"{name}.txt"
    code = main(["render", *extra, "--out", str(out), "--report", str(rep), "--workers", "1"])
    return code, out, rep


def test_classical_render_report(tmp_path):
    code, out, rep = _render(tmp_path, "gen:qornell:64", "--mode", "classical")
    assert code == 0
    assert out.stat().st_size == 49167  # 15-byte header + 128*128*3
    report = parse_report(rep.read_text())
    assert report["counters.int_per_ray"].startswith("64.0")
    assert "timing.wall_seconds" not in report


def test_quantum_render_reruns_identical(tmp_path):
    args = ("gen:depth:32", "--res", "24x16", "--iters", "3", "--neighbor-opt", "--compare", "--seed", "4")
    _, a_img, a_rep = _render(tmp_path, *args, name="a")
    _, b_img, b_rep = _render(tmp_path, *args, name="b")
    assert a_img.read_bytes() == b_img.read_bytes()
    assert a_rep.read_bytes() == b_rep.read_bytes()
    report = parse_report(a_rep.read_text())
    assert report["config.resolution"] == "24x16" and "error.dpix" in report


@pytest.mark.parametrize("args", [
    ("/nonexistent.yaml",),
    ("gen:qornell:3",),
    ("gen:qornell:64", "--iters", "0"),
    ("gen:qornell:64", "--c", "2.5"),
])
def test_bad_input_exits_nonzero_without_output(tmp_path, args, capsys):
    code, out, rep = _render(tmp_path, *args)
    assert code == 2
    assert not out.exists() and not rep.exists()
    assert "error:" in capsys.readouterr().err


def test_malformed_scene_file(tmp_path):
    scene = tmp_path / "bad.yaml"
    scene.write_text("world_bits: 4\nprimitives:\n  - {min: [0, 0, 0], max: [1, 1, 1]}\n")
    code, out, _ = _render(tmp_path, str(scene))
    assert code == 2 and not out.exists()


@pytest.mark.parametrize("res", ["0x4", "4", "ax4"])
def test_resolution_flag_rejected(res):
    with pytest.raises(SystemExit):
        main(["render", "gen:qornell:8", "--res", res])


def test_sweep_classical_slope_is_one(tmp_path):
    rows, fits = run_sweep("qornell", [8, 16, 32], ["classical"], RenderConfig(resolution=(8, 8)))
    assert [r["int_per_ray"] for r in rows] == [8.0, 16.0, 32.0]
    assert fits["classical"][0] == pytest.approx(1.0, abs=1e-12)
    assert format_sweep_csv(rows).splitlines()[0] == "scene,N,mode,int,int_per_ray,dpix,nrmse"


def test_sweep_command_writes_csv_and_fit(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--sizes", "8,16", "--modes", "classical,quantum", "--res", "8x8",
                 "--workers", "1", "--out", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 5
    fit = (tmp_path / "s-fit.csv").read_text().splitlines()
    assert fit[0] == "mode,slope,intercept" and fit[1].startswith("classical,1.000000")


def test_sweep_rejects_non_power_of_two(tmp_path):
    assert main(["sweep", "--sizes", "8,12", "--out", str(tmp_path / "x.csv")]) == 2
    assert not (tmp_path / "x.csv").exists()


def test_loglog_slope():
    assert loglog_slope([1, 2, 4, 8], [3, 6, 12, 24])[0] == pytest.approx(1.0)
    assert loglog_slope([4, 16, 64], [2, 4, 8])[0] == pytest.approx(0.5)


def test_estimate(capsys):
    rows = estimate_table([8, 64], 1.8)
    assert rows[0]["schedule"] == "{1,2}" and rows[1]["L"] == 4
    assert main(["estimate", "--sizes", "8,64"]) == 0
    out = capsys.readouterr().out
    assert "0.2046" in out and "{1,2,3,6}" in out
