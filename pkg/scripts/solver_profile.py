"""Iteration counts and wall time of the transport solver across sizes and
solver settings (eps-scaling and Newton steps on or off).

    python scripts/solver_profile.py --sizes 8 32 128
"""
import argparse
import time

import numpy as np

from spherelight import generate_anchors
from spherelight.transport import SinkhornConfig, sinkhorn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 32, 128])
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--epsilon", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    settings = {
        "scaling+newton": SinkhornConfig(epsilon=args.epsilon),
        "scaling only": SinkhornConfig(epsilon=args.epsilon, newton=False),
        "plain": SinkhornConfig(epsilon=args.epsilon, newton=False, epsilon_scaling=False),
    }
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>4} {'setting':>15} {'mean iters':>10} {'max iters':>9} {'converged':>9} {'ms/solve':>9}")
    for n in args.sizes:
        C = generate_anchors(n).cost
        problems = [(rng.dirichlet(np.full(n, 0.5)), rng.dirichlet(np.full(n, 0.5))) for _ in range(args.instances)]
        for name, cfg in settings.items():
            t0 = time.perf_counter()
            plans = [sinkhorn(U, V, C, cfg) for U, V in problems]
            ms = 1e3 * (time.perf_counter() - t0) / len(plans)
            its = [tp.iterations for tp in plans]
            ok = sum(tp.converged for tp in plans)
            print(f"{n:4d} {name:>15} {np.mean(its):10.1f} {max(its):9d} {ok:>5}/{len(plans):<3} {ms:9.2f}")


if __name__ == "__main__":
    main()
