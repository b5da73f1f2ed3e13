"""Row sums of Bernoulli triangular arrays against their limiting law.

For each n, simulates the row sum of p_{n,k} = 0.5 (k = 1) and c/n
(2 <= k <= n) and reports its total-variation distance to the
extended Poisson-binomial limit returned by the diagnostic.
"""

import argparse

import numpy as np

from paintbox_kit.poisson_binomial import (
    SpikeMeasure,
    TriangularArray,
    epb_pmf,
    epb_sample,
    seq_bin_limit,
    seq_bin_limit_law,
    total_variation_pmf,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    c = args.c
    array = TriangularArray(lambda n: [0.5] + [c / n] * (n - 1))
    res = seq_bin_limit(array, 1000)
    law = seq_bin_limit_law(res)
    print(f"limit: lambda={res.lam:.6f} atoms={res.atoms} converged={res.converged}")

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'TV(row sum, limit)':>20} {'TV(exact row, limit)':>22}")
    for n in (5, 10, 50, 200, 1000):
        row = SpikeMeasure(0.0, tuple(array.row(n)))
        chunk = max(1, min(args.samples, 2_000_000 // n))
        draws = np.concatenate([epb_sample(row, rng, size=chunk) for _ in range(-(-args.samples // chunk))])
        emp = np.bincount(draws) / draws.size
        j = max(emp.size, 30)
        limit = epb_pmf(law, j)
        exact = epb_pmf(row, j)
        print(f"{n:6d} {total_variation_pmf(emp, limit):20.4f} {total_variation_pmf(exact, limit):22.5f}")


if __name__ == "__main__":
    main()
