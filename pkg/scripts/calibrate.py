"""Calibrate (beta, gamma) on the deterministic tree suite and write a key=value config."""

import argparse
import json

from qbacktrack.search import calibrate_constants
from qbacktrack.suite import tree_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2015, help="suite seed")
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--out", default="qwb.cfg")
    args = ap.parse_args()
    suite = tree_suite(seed=args.seed)
    cal = calibrate_constants([s.tree for s in suite["unmarked"]], [s.tree for s in suite["marked"]], args.delta)
    with open(args.out, "w") as fh:
        fh.write(cal.to_config())
    summary = {k: v for k, v in cal.to_json().items() if k != "grid"}
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
