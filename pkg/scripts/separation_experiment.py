"""Paired classical/quantum cost under the heavy-tailed clause-count law.

Writes per-trial rows as CSV and prints per-n means and the ratio trend.
"""

import argparse
import json

from qbacktrack.analysis import separation_experiment
from qbacktrack.csp import RngSpec
from qbacktrack.search import DetectionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[10, 12, 14, 16])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=909)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--csv", default="separation.csv")
    args = ap.parse_args()
    rep = separation_experiment(args.n, args.samples, DetectionConfig(), RngSpec(args.seed), workers=args.workers)
    with open(args.csv, "w") as fh:
        fh.write(rep.to_csv())
    print(json.dumps(rep.summary_json(), indent=2))


if __name__ == "__main__":
    main()
