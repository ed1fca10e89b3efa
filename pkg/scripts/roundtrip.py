"""Render sparse light distributions as lobe maps, decompose them again, and
report the exact EMD to the original for plain and solid-angle-weighted sums.

    python scripts/roundtrip.py --trials 20 --max-active 5
"""
import argparse

import numpy as np

from spherelight import IlluminationParams, decompose, exact_emd, generate_anchors, render_gaussian_map
from spherelight.gaussian_map import GaussianMapConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--max-active", type=int, default=5)
    ap.add_argument("--fraction", type=float, default=0.05)
    ap.add_argument("--s", type=float, default=0.0025)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    anchors = generate_anchors(args.n)
    cfg = GaussianMapConfig(angular_size=args.s)
    bound = anchors.nearest_neighbor_distances().max()
    rng = np.random.default_rng(args.seed)
    print(f"max nearest-neighbour spacing: {bound:.4f} rad")
    print(f"{'trial':>5} {'active':>6} {'plain EMD':>10} {'weighted EMD':>12}")
    rows = []
    for t in range(args.trials):
        k = int(rng.integers(1, args.max_active + 1))
        dist = np.zeros(args.n)
        dist[rng.choice(args.n, k, replace=False)] = rng.dirichlet(np.ones(k))
        p = IlluminationParams(np.tile(dist, (3, 1)), rng.uniform(100, 1000, 3), rng.uniform(0, 0.5, 3))
        img = render_gaussian_map(p, anchors, cfg)
        emd = []
        for weighted in (False, True):
            rec = decompose(img, anchors, args.fraction, weighted=weighted)
            emd.append(max(exact_emd(p.distribution[c], rec.distribution[c], anchors.cost).cost for c in range(3)))
        rows.append(emd)
        print(f"{t:5d} {k:6d} {emd[0]:10.4f} {emd[1]:12.4f}")
    rows = np.array(rows)
    for name, col in (("plain", rows[:, 0]), ("weighted", rows[:, 1])):
        print(f"{name:>8}: max {col.max():.4f}, within bound {int((col <= bound).sum())}/{len(col)}")


if __name__ == "__main__":
    main()
