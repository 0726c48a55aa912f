"""Command-line front end: ``qtrace render | sweep | estimate``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .metrics import image_error
from .qcore import ConfigurationError
from .render import RenderConfig, RenderResult, render_scene
from .scenes import SceneError, load_scene
from .search import QSearchConfig, fn_prob_qs, fn_prob_rc

log = logging.getLogger("qtrace")

EXIT_OK = 0
EXIT_INPUT = 2


# -- image and report I/O -------------------------------------------------------

def encode_ppm(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {image.shape}")
    h, w, _ = image.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(image, np.uint8).tobytes()


def write_image(image: np.ndarray, path: str | Path) -> None:
    """Binary PPM (P6, maxval 255), rows top to bottom."""
    Path(path).write_bytes(encode_ppm(image))


def read_image(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PPM")
    w, h = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + 3 * w * h], np.uint8)
    return pixels.reshape(h, w, 3).copy()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def format_report(scene_path: str, scene, cfg: RenderConfig, result: RenderResult,
                  error=None, wall_time: Optional[float] = None) -> str:
    """Key-value report. Worker count is left out: it must not change any output."""
    w, h = result.resolution
    lines = ["# qtrace render report"]
    pairs = [
        ("scene", scene_path), ("scene.name", scene.name),
        ("scene.primitives", scene.raw_count), ("scene.primitives_padded", scene.padded_count),
        ("config.mode", cfg.mode), ("config.iterations", cfg.iterations),
        ("config.neighbor_opt", cfg.neighbor_opt), ("config.termination", cfg.termination),
        ("config.direct_iterations", cfg.direct_iterations),
        ("config.light_samples", cfg.light_samples), ("config.vpls", cfg.vpl_count),
        ("config.c", cfg.c), ("config.seed", cfg.seed), ("config.resolution", f"{w}x{h}"),
    ]
    c = result.counters
    pairs += [("counters.rays", c.rays), ("counters.eval", c.eval), ("counters.c_int", c.c_int),
              ("counters.int", c.int_total), ("counters.int_per_ray", c.int_per_ray),
              ("counters.cpix", c.cpix), ("counters.iterations", c.iterations)]
    if error is not None:
        pairs += [("error.nrmse", error.nrmse), ("error.dpix", error.dpix),
                  ("error.dpix_pct", error.dpix_pct),
                  ("error.tie_pixels", int(np.count_nonzero(error.tie_mask)))]
    for s in result.iteration_stats:
        key = f"iteration.{s.pass_name}.{s.iteration}"
        pairs.append((key, f"active={s.active} found={s.found} eval={s.eval} c_int={s.c_int} "
                           f"cpix={s.cpix} mismatched={s.mismatched}"))
    if wall_time is not None:
        pairs.append(("timing.wall_seconds", round(wall_time, 3)))
    lines += [f"{k} = {_fmt(v)}" for k, v in pairs]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


# -- commands ---------------------------------------------------------------------

def _default_workers() -> int:
    env = os.environ.get("QTRACE_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer QTRACE_WORKERS=%r", env)
    return os.cpu_count() or 1


def _parse_res(text: Optional[str]) -> Optional[tuple[int, int]]:
    if text is None:
        return None
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution must look like 128x128, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return w, h


def _config(args, mode: Optional[str] = None) -> RenderConfig:
    return RenderConfig(
        mode=mode or args.mode, iterations=args.iters, neighbor_opt=args.neighbor_opt,
        termination=args.terminate, direct_iterations=args.direct_iters,
        light_samples=args.light_samples, vpl_count=args.vpls, seed=args.seed,
        resolution=args.res, workers=args.workers or _default_workers(), c=args.c)


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def cmd_render(args) -> int:
    try:
        scene = load_scene(args.scene)
        cfg = _config(args)
        if scene.camera is None:
            raise SceneError(f"{args.scene}: scene has no camera")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    start = time.perf_counter()
    reference = None
    if args.compare or cfg.mode == "classical":
        reference = render_scene(scene, RenderConfig(mode="classical", resolution=cfg.resolution,
                                                     light_samples=cfg.light_samples,
                                                     vpl_count=cfg.vpl_count, seed=cfg.seed))
    result = reference if cfg.mode == "classical" else render_scene(scene, cfg, reference)
    error = None
    if args.compare:
        error = image_error(reference.image, result.image, reference.tie_mask)
    wall = time.perf_counter() - start
    log.info("rendered %s in %.2fs", scene.name, wall)
    report = format_report(args.scene, scene, cfg, result, error, wall if args.timing else None)
    _write_atomic(Path(args.out), encode_ppm(result.image))
    if args.report:
        _write_atomic(Path(args.report), report.encode("utf-8"))
    else:
        sys.stdout.write(report)
    return EXIT_OK


def loglog_slope(ns: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of log(y) = slope * log(n) + intercept."""
    slope, intercept = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope), float(intercept)


SWEEP_COLUMNS = ("scene", "N", "mode", "int", "int_per_ray", "dpix", "nrmse")


def run_sweep(family: str, sizes: Sequence[int], modes: Sequence[str], base: RenderConfig
              ) -> tuple[list[dict], dict[str, tuple[float, float]]]:
    for n in sizes:
        if n < 1 or n & (n - 1):
            raise ConfigurationError(f"sweep sizes must be powers of two, got {n}")
    configs = {mode: replace(base, mode=mode) for mode in modes}
    scenes = [load_scene(f"gen:{family}:{n}") for n in sizes]
    rows = []
    for n, scene in zip(sizes, scenes):
        reference = render_scene(scene, RenderConfig(mode="classical", resolution=base.resolution,
                                                     light_samples=base.light_samples,
                                                     vpl_count=base.vpl_count, seed=base.seed))
        for mode in modes:
            cfg = configs[mode]
            res = reference if mode == "classical" else render_scene(scene, cfg, reference)
            err = image_error(reference.image, res.image, reference.tie_mask)
            rows.append({"scene": scene.name, "N": n, "mode": mode, "int": res.counters.int_total,
                         "int_per_ray": round(res.counters.int_per_ray, 6), "dpix": err.dpix,
                         "nrmse": round(err.nrmse, 6)})
            log.info("%s N=%d %s: int/ray %.2f", family, n, mode, res.counters.int_per_ray)
    fits = {}
    for mode in modes:
        sel = [r for r in rows if r["mode"] == mode]
        if len(sel) >= 2:
            fits[mode] = loglog_slope([r["N"] for r in sel], [r["int_per_ray"] for r in sel])
    return rows, fits


def format_sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def format_fit_csv(fits: dict[str, tuple[float, float]]) -> str:
    lines = ["mode,slope,intercept"]
    lines += [f"{m},{s:.6f},{i:.6f}" for m, (s, i) in fits.items()]
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    try:
        base = _config(args, mode="quantum")
        rows, fits = run_sweep(args.family, args.sizes, args.modes, base)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    _write_atomic(out, format_sweep_csv(rows).encode())
    fit_path = out.with_name(out.stem + "-fit.csv")
    _write_atomic(fit_path, format_fit_csv(fits).encode())
    for mode, (slope, _) in fits.items():
        print(f"{mode}: log-log slope of int_per_ray vs N = {slope:.4f}")
    return EXIT_OK


def estimate_table(sizes: Sequence[int], c: float) -> list[dict]:
    cfg = QSearchConfig(c)
    rows = []
    for n in sizes:
        sched = cfg.schedule(n)
        rows.append({"N": n, "schedule": "{" + ",".join(map(str, sched)) + "}", "L": len(sched),
                     "p_qs": fn_prob_qs(n, cfg), "p_rc": fn_prob_rc(n) if n >= 4 else float("nan")})
    return rows


def cmd_estimate(args) -> int:
    try:
        rows = estimate_table(args.sizes, args.c)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{'N':>6}  {'schedule':<22} {'L':>2}  {'p_QS':>7}  {'p_RC':>7}")
    for r in rows:
        print(f"{r['N']:>6}  {r['schedule']:<22} {r['L']:>2}  {r['p_qs']:7.4f}  {r['p_rc']:7.4f}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

def _sizes(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_render_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iters", type=int, default=4, help="trace iterations per pass (#IT)")
    p.add_argument("--neighbor-opt", action="store_true", help="gather hits from 4-neighbours")
    p.add_argument("--terminate", action="store_true", help="per-ray early termination")
    p.add_argument("--direct-iters", type=int, default=2, help="shadow-ray iterations")
    p.add_argument("--light-samples", type=int, default=1, help="samples per area light")
    p.add_argument("--vpls", type=int, default=0, help="virtual point lights per pixel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--res", type=_parse_res, default=None, help="WIDTHxHEIGHT")
    p.add_argument("--c", type=float, default=1.8, help="search schedule growth constant")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $QTRACE_WORKERS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtrace", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one scene")
    r.add_argument("scene", help="scene file or gen:<family>:<N>")
    r.add_argument("--mode", choices=("classical", "quantum", "randomized_classical"), default="quantum")
    _add_render_flags(r)
    r.add_argument("--out", default="render.ppm", help="output image (PPM)")
    r.add_argument("--report", default=None, help="report path (default: stdout)")
    r.add_argument("--compare", action="store_true",
                   help="also render the exhaustive reference and report image error")
    r.add_argument("--timing", action="store_true", help="include wall time in the report")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("sweep", help="intersection-count scaling over scene sizes")
    s.add_argument("--family", choices=("qornell", "depth"), default="qornell")
    s.add_argument("--sizes", type=_sizes, default=[8, 16, 32, 64, 128, 256, 512])
    s.add_argument("--modes", type=lambda t: t.split(","), default=["classical", "quantum"])
    _add_render_flags(s)
    s.add_argument("--out", default="sweep.csv", help="CSV output; fits go to <stem>-fit.csv")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("estimate", help="false-negative estimates per N")
    e.add_argument("--sizes", type=_sizes, default=[8, 16, 32, 64, 128, 256, 512])
    e.add_argument("--c", type=float, default=1.8)
    e.set_defaults(func=cmd_estimate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
