"""Fit detect and unique_find walk-step counts against their predicted envelopes."""

import argparse
import math

import numpy as np

from qbacktrack.backtrack import build_tree
from qbacktrack.csp import naive_heuristic, random_ksat
from qbacktrack.search import DetectionConfig, detect, unique_find_in_tree
from qbacktrack.spectral import eigendecompose
from qbacktrack.suite import mark_deepest_leaf, random_branching_tree, unmarked
from qbacktrack.walk import build_walk


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=707)
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    cfg = DetectionConfig()
    print("kind,T,n,delta,steps,envelope,ratio")
    for n in range(4, 14):
        tree = build_tree(random_ksat(n, 3, 3 * n, rng).predicate(), naive_heuristic, n)
        if tree.marked[0]:
            continue
        tree = unmarked(tree)
        dc = eigendecompose(build_walk(tree))
        for delta in (0.01, 0.05, 0.2):
            steps = detect(tree, n, tree.T, cfg.with_delta(delta), rng, decomp=dc).walk_steps
            env = math.sqrt(tree.T * n) * math.log(1 / delta)
            print(f"detect,{tree.T},{n},{delta},{steps},{env:.4f},{steps / env:.4f}")
    for T in np.unique(np.geomspace(8, 600, 20).astype(int)):
        tree = mark_deepest_leaf(random_branching_tree(int(T), rng), rng)
        steps = np.mean([unique_find_in_tree(tree, cfg, rng).transcript.walk_steps for _ in range(args.runs)])
        env = math.sqrt(tree.T * tree.n) * math.log2(tree.n + 1) * math.log2(tree.T + 1) ** 2
        print(f"unique_find,{tree.T},{tree.n},{cfg.delta},{steps:.1f},{env:.4f},{steps / env:.4f}")


if __name__ == "__main__":
    main()
