"""Int/Ray against primitive count for the exhaustive and quantum renderers.

Writes a CSV with one row per (N, mode) and prints the log-log slopes.
"""
import argparse

from qtrace.cli import format_fit_csv, format_sweep_csv, run_sweep
from qtrace.render import RenderConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="qornell", choices=("qornell", "depth"))
    ap.add_argument("--sizes", default="8,16,32,64,128,256,512")
    ap.add_argument("--modes", default="classical,quantum")
    ap.add_argument("--iters", type=int, default=4)
    ap.add_argument("--res", type=int, default=64)
    ap.add_argument("--neighbor-opt", action="store_true")
    ap.add_argument("--terminate", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="scaling.csv")
    args = ap.parse_args()
    base = RenderConfig(iterations=args.iters, neighbor_opt=args.neighbor_opt,
                        termination=args.terminate, seed=args.seed, resolution=(args.res, args.res))
    rows, fits = run_sweep(args.family, [int(s) for s in args.sizes.split(",")],
                           args.modes.split(","), base)
    with open(args.out, "w") as fh:
        fh.write(format_sweep_csv(rows))
    print(format_sweep_csv(rows), end="")
    print(format_fit_csv(fits), end="")


if __name__ == "__main__":
    main()
