"""Wall-clock cost and point counts of both simulators for the catalog models."""

import argparse
import time

import numpy as np

from tailstorm.general import simulate_general
from tailstorm.m3 import simulate_m3
from tailstorm.models import model_broken, model_delta, model_mma, model_periodic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--bounds", type=int, nargs=2, default=[0, 3])
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print("construction,model,seconds,mean_points,max_certificate")
    for name, fn, models in [
        ("m3", simulate_m3, [model_delta(), model_mma(0.5, 1.0), model_broken()]),
        ("general", simulate_general, [model_delta(), model_mma(0.5, 1.0), model_periodic(), model_broken()]),
    ]:
        for m in models:
            t0 = time.perf_counter()
            b = fn(m, 1.0, args.bounds, args.n, rng, threads=args.threads)
            dt = time.perf_counter() - t0
            print(f"{name},{m.name},{dt:.2f},{b.n_points.mean():.1f},{b.certificate.max():.3g}")


if __name__ == "__main__":
    main()
