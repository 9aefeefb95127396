"""Adaptive vs uniform refinement on the same noisy data set.

Writes both runs below --out and prints the error comparison at the largest
d.o.f. count covered by both.
"""
import argparse
import json
import os

from adaptive_eit.experiments.afem import compare_runs, make_data, run_afem
from adaptive_eit.experiments.config import DESK


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=8, help="adaptive loops")
    ap.add_argument("--K-uniform", type=int, default=4, help="uniform loops")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--phantom", default="two_disks")
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args()

    cfg = DESK.replace(K=args.K, seed=args.seed, phantom=args.phantom, write_fields=False)
    data = make_data(cfg)
    a = run_afem(cfg, data, os.path.join(args.out, "adaptive"))
    u = run_afem(cfg.replace(mode="uniform", K=args.K_uniform), data, os.path.join(args.out, "uniform"))
    for name, res in (("adaptive", a), ("uniform", u)):
        print(name, [(r["dofs"], round(r["L1_error"], 4)) for r in res.records])
    print(json.dumps(compare_runs(a.records, u.records), indent=2))


if __name__ == "__main__":
    main()
