"""Monte Carlo badness per level next to the exact recursion and the closed-form bound.

Prints the fitted log log slope for every cell below threshold.
"""
import argparse
import math

from ftlab import concat


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    rows = concat.threshold_sweep([3, 4, 5], [1e-3, 1e-2, 1e-1], 3, args.trials, args.seed, args.workers)
    print(f"{'m':>2} {'eps':>6} {'k':>2} {'mc':>12} {'exact':>12} {'bound':>12}")
    for r in rows:
        exact = concat.exact_badness(r["m"], r["eps"], r["k"])
        print(f"{r['m']:2d} {r['eps']:6.3f} {r['k']:2d} {r['mc_estimate']:12.4e} {exact:12.4e} "
              f"{r['closed_form_bound']:12.4e}")
    for m in (3, 4, 5):
        A = math.comb(m, 2)
        for eps in (1e-3, 1e-2, 1e-1):
            if A * eps >= 1:
                continue
            exact = {k: concat.exact_badness(m, eps, k) for k in (1, 2, 3)}
            exact = {k: v for k, v in exact.items() if v > 0}
            if len(exact) >= 2:
                s = concat.loglog_slope(A, exact)
                print(f"m={m} eps={eps}: exact slope {s:.4f} = {s / math.log(2):.3f} log 2")


if __name__ == "__main__":
    main()
