"""Galerkin degrees deg(f_n, U_n) for n = N..N+w over a batch of random tail maps.

    python3 scripts/stabilization_sweep.py --maps 20 --window 5 > sweep.csv
"""

import argparse
import csv
import sys

from hilbertdeg.catalog import random_tail_expected, random_tail_map
from hilbertdeg.pipeline import compute_Deg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--maps", type=int, default=20)
    ap.add_argument("--window", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0, help="first map seed")
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["map_seed", "n", "deg", "epsilon", "tail_bound", "expected"])
    for s in range(args.seed, args.seed + args.maps):
        rep = compute_Deg(random_tail_map(s), window=args.window, seed=s)
        for n, d in rep.window:
            w.writerow([s, n, d, f"{rep.epsilon.epsilon:.6g}", f"{rep.tail_bounds[n]:.6g}", random_tail_expected(s)])


if __name__ == "__main__":
    main()
