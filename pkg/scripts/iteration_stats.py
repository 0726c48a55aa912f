"""Per-iteration statistics of the quantum renderer against the exhaustive reference."""
import argparse

from qtrace.metrics import dpix
from qtrace.render import RenderConfig, render_scene
from qtrace.scenes import load_scene


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scene", nargs="?", default="gen:depth:64")
    ap.add_argument("--iters", type=int, default=8)
    ap.add_argument("--neighbor-opt", action="store_true")
    ap.add_argument("--terminate", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--res", type=int, default=128)
    args = ap.parse_args()
    scene = load_scene(args.scene)
    res = (args.res, args.res)
    ref = render_scene(scene, RenderConfig(mode="classical", resolution=res))
    print(f"{'#IT':>4} {'int/ray':>8} {'#Dpix':>6} {'masked':>6} {'cpix':>6}")
    for k in range(1, args.iters + 1):
        cfg = RenderConfig(iterations=k, neighbor_opt=args.neighbor_opt, termination=args.terminate,
                           seed=args.seed, resolution=res)
        out = render_scene(scene, cfg, ref)
        print(f"{k:>4} {out.counters.int_per_ray:8.2f} {dpix(ref.image, out.image)[0]:>6} "
              f"{dpix(ref.image, out.image, ref.tie_mask)[0]:>6} {out.counters.cpix:>6}")


if __name__ == "__main__":
    main()
