"""Rejection rate of the time-change-formula battery against sample size.

Prints, for each n, how often the battery rejects the broken model and the
moving-maxima model over independent seeded runs.
"""

import argparse

from tailstorm.models import model_broken, model_mma
from tailstorm.streams import derive_stream
from tailstorm.tcf import tcf_battery


def rejection_rate(model, n, runs, seed):
    hits = 0
    for r in range(runs):
        rep = tcf_battery(model, 1.0, n, derive_stream(seed, "power", model.name, n, r))
        hits += not rep.passed
    return hits / runs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 10_000])
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print("n,model,rejection_rate")
    for n in args.n:
        for m in (model_broken(), model_mma(0.5, 1.0)):
            print(f"{n},{m.name},{rejection_rate(m, n, args.runs, args.seed):.3f}")


if __name__ == "__main__":
    main()
