"""False-negative estimates per N: schedule product, exact model, and subset baseline."""
import argparse

from qtrace.search import (
    QSearchConfig,
    fn_prob_exact,
    fn_prob_iteration_product,
    fn_prob_qs,
    fn_prob_rc,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=1.8)
    ap.add_argument("--sizes", default="8,16,32,64,128,256,512")
    args = ap.parse_args()
    cfg = QSearchConfig(args.c)
    print(f"{'N':>5} {'schedule':<20} {'product':>8} {'exact':>8} {'iter':>8} {'subset':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        sched = "{" + ",".join(map(str, cfg.schedule(n))) + "}"
        print(f"{n:>5} {sched:<20} {fn_prob_qs(n, cfg):8.4f} {fn_prob_exact(n, cfg):8.4f} "
              f"{fn_prob_iteration_product(n, cfg):8.4f} {fn_prob_rc(n):8.4f}")


if __name__ == "__main__":
    main()
