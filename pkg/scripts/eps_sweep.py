"""Gap between the entropic transport cost and the exact EMD as eps shrinks.

    python scripts/eps_sweep.py --instances 20 --n 8
"""
import argparse

import numpy as np

from spherelight.transport import SinkhornConfig, exact_emd, sinkhorn


def random_problem(rng, n):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    c = np.triu(np.arccos(np.clip(d @ d.T, -1, 1)), 1)
    return rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n)), c + c.T


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4])
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    problems = [random_problem(rng, args.n) for _ in range(args.instances)]
    exact = [exact_emd(U, V, C).cost for U, V, C in problems]
    print(f"{'eps':>8} {'mean gap':>11} {'max gap':>11} {'mean iters':>10} {'max marg err':>12}")
    for e in args.eps:
        plans = [sinkhorn(U, V, C, SinkhornConfig(epsilon=e)) for U, V, C in problems]
        gaps = [float((C * tp.plan).sum()) - x for (_, _, C), tp, x in zip(problems, plans, exact)]
        print(
            f"{e:8.0e} {np.mean(gaps):11.3e} {np.max(gaps):11.3e} "
            f"{np.mean([tp.iterations for tp in plans]):10.1f} {max(tp.marginal_error for tp in plans):12.2e}"
        )


if __name__ == "__main__":
    main()
