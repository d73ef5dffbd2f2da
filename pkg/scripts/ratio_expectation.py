"""Exact expected classical cost against an idealized quantum proxy.

Averages the exact expected NaiveBt tree size E(n, m) and sqrt(E n) over the
heavy-tailed clause-count law, with no sampling noise.  Shows which way the
ratio moves at small n before any constant factors enter.
"""

import argparse
import math

import numpy as np

from qbacktrack.analysis import expected_tree_size, heavy_tail_distribution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=list(range(8, 25, 2)))
    ap.add_argument("--c", type=float, default=0.454)
    args = ap.parse_args()
    print("n,classical_mean,proxy_sqrt_En,ratio_with_n,ratio_without_n")
    for n in args.n:
        dist = heavy_tail_distribution(n, args.c)
        sizes = np.array([expected_tree_size(n, 3, int(m)).E for m in dist.support])
        C = float(np.sum(dist.probs * sizes))
        Q = float(np.sum(dist.probs * np.sqrt(sizes * n)))
        Q0 = float(np.sum(dist.probs * np.sqrt(sizes)))
        print(f"{n},{C:.4f},{Q:.4f},{C / Q:.4f},{C / Q0:.4f}")


if __name__ == "__main__":
    main()
