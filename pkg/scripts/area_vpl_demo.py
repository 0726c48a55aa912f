"""Area-light and VPL renders at increasing sample counts, with NRMSE against a
dense exhaustive reference. Images are written next to the output prefix."""
import argparse

from qtrace.cli import write_image
from qtrace.metrics import nrmse
from qtrace.render import RenderConfig, render_scene
from qtrace.scenes import qornell, qornell_area


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--res", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reference-samples", type=int, default=512)
    ap.add_argument("--prefix", default="demo")
    args = ap.parse_args()
    res = (args.res, args.res)

    scene = qornell_area(16, res)
    ref = render_scene(scene, RenderConfig(mode="classical", light_samples=args.reference_samples))
    write_image(ref.image, f"{args.prefix}-area-ref.ppm")
    for k in (4, 8, 16, 32):
        out = render_scene(scene, RenderConfig(light_samples=k, seed=args.seed))
        write_image(out.image, f"{args.prefix}-area-{k}.ppm")
        print(f"area samples {k:>3}: NRMSE {nrmse(ref.image, out.image, ref.tie_mask):.4f}")

    scene = qornell(16, res)
    ref = render_scene(scene, RenderConfig(mode="classical", vpl_count=args.reference_samples))
    write_image(ref.image, f"{args.prefix}-vpl-ref.ppm")
    for k in (1, 2, 4):
        out = render_scene(scene, RenderConfig(vpl_count=k, seed=args.seed))
        write_image(out.image, f"{args.prefix}-vpl-{k}.ppm")
        print(f"VPLs {k}: NRMSE {nrmse(ref.image, out.image, ref.tie_mask):.4f}")


if __name__ == "__main__":
    main()
