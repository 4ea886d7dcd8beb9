"""Multi-fault norm of random system-bath models against the combinatorial bound,
as the step length shrinks."""
import argparse

from ftlab import faultpath
from ftlab.seeding import substream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--models", type=int, default=5)
    args = ap.parse_args()
    print(f"{'delta':>7} {'model':>5} {'A':>3} {'eta':>9} {'eta_meas':>9} {'|F|':>10} {'bound':>10} "
          f"{'first-order':>11}")
    for delta in (0.08, 0.04, 0.02, 0.01):
        for m in range(args.models):
            model = faultpath.random_model(2, 1, n_steps=8, terms_per_step=2, delta=delta,
                                           seed=substream(args.seed, m))
            fps = faultpath.fault_path_expand(model)
            rep = faultpath.multi_fault_check(fps)
            eta = faultpath.measured_eta(fps, 8, substream(args.seed, m, 1))
            print(f"{delta:7.3f} {m:5d} {rep['locations']:3d} {rep['eta']:9.5f} {eta:9.5f} "
                  f"{rep['f_norm']:10.3e} {rep['bound']:10.3e} {rep['first_order_bound']:11.3e}")


if __name__ == "__main__":
    main()
