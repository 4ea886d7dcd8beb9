"""Scan mixtures q * delta(1^n) + (1 - q) * Bernoulli(r)^n for violations of the
weight-tail lower bound, and show the conditional weight that breaks it."""
import argparse

import numpy as np

from ftlab.corrtail import ErrorStringDistribution, prefix_conditional_weight, tail_bound_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=list(range(4, 15)))
    ap.add_argument("--grid", type=int, default=19)
    args = ap.parse_args()
    qs = np.linspace(0.05, 0.95, args.grid)
    print(f"{'n':>3} {'q':>5} {'r':>5} {'s':>7} {'lhs':>8} {'rhs':>8} {'slack':>8} {'violations':>10}")
    for n in args.n:
        worst, count = None, 0
        for q in qs:
            for r in qs:
                t = tail_bound_check(ErrorStringDistribution.mixture(n, q, r))
                count += not t.passed
                if worst is None or t.slack < worst[0].slack:
                    worst = (t, q, r)
        t, q, r = worst
        print(f"{n:3d} {q:5.2f} {r:5.2f} {t.s:7.4f} {t.lhs:8.5f} {t.rhs:8.5f} {t.slack:8.5f} {count:10d}")
    d = ErrorStringDistribution.mixture(10, 0.4, 0.2)
    s = tail_bound_check(d).s
    cond = prefix_conditional_weight(d)
    print("\nn=10 q=0.4 r=0.2: E(|x| | 0^i 1 prefix) vs (n - i) s")
    for i, c in enumerate(cond):
        print(f"  i={i}: {c:7.4f}  {(d.n - i) * s:7.4f}")


if __name__ == "__main__":
    main()
