"""Monte Carlo tallies and goodness-of-fit statistics.

Batch samplers return boolean membership arrays.  An allocation of [n] is
encoded as a vector of multiplicities indexed by subset bitmask, which is
canonical: two draws give the same vector iff they give the same
multiset of features.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import permutations
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .allocation import FeatureAllocation, apply_permutation


def mask_counts(z: np.ndarray, singletons: Optional[np.ndarray] = None) -> np.ndarray:
    """Multiplicity vectors (size, 2**n) from memberships (size, n, K).

    ``singletons`` (size, n), if given, adds that many {i} features per
    index.  Column 0 (the empty mask) counts empty columns and is ignored
    by the decoders.
    """
    size, n, k = z.shape
    weights = 1 << np.arange(n)
    masks = np.tensordot(z.astype(np.int64), weights, axes=([1], [0]))  # (size, K)
    out = np.zeros((size, 2**n), dtype=np.int64)
    rows = np.arange(size)
    for j in range(k):
        out[rows, masks[:, j]] += 1  # one hit per row, so no collisions
    if singletons is not None:
        out[:, weights] += singletons
    return out


def decode(row: Sequence[int], n: int) -> FeatureAllocation:
    feats = []
    for mask in range(1, 2**n):
        f = tuple(i + 1 for i in range(n) if mask >> i & 1)
        feats.extend([f] * int(row[mask]))
    return FeatureAllocation._trusted(n, tuple(feats))


def tally_codes(codes: np.ndarray, n: int) -> Counter:
    """Counter of allocations from multiplicity vectors (one row per draw)."""
    codes = codes.copy()
    codes[:, 0] = 0
    base = int(codes.max(initial=0)) + 1
    if codes.shape[1] * math.log2(base) < 62:
        # pack each row into one integer; unique on a 1-d key is much faster
        key = codes @ (base ** np.arange(codes.shape[1], dtype=np.int64))
        _, first, counts = np.unique(key, return_index=True, return_counts=True)
        uniq = codes[first]
    else:
        uniq, counts = np.unique(codes, axis=0, return_counts=True)
    return Counter({decode(row, n): int(c) for row, c in zip(uniq, counts)})


def tally(samples: Iterable[FeatureAllocation]) -> Counter:
    return Counter(samples)


def empirical(counts: Counter) -> dict:
    total = sum(counts.values())
    return {k: c / total for k, c in counts.items()}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


def binomial_z(count: int, total: int, prob: float) -> float:
    """Standardised deviation of a binomial count from its mean."""
    sd = math.sqrt(total * prob * (1 - prob))
    if sd == 0:
        return 0.0 if count == total * prob else math.inf
    return (count - total * prob) / sd


def expected_tv(probs: Iterable[float], samples: int) -> float:
    """Approximate E[TV] of an empirical law from ``samples`` draws (normal approximation)."""
    return 0.5 * sum(math.sqrt(2 * p * (1 - p) / (math.pi * samples)) for p in probs)


def chi_square_homogeneity(a: Counter, b: Counter, min_expected: float = 5.0) -> float:
    """p-value for two samples coming from one law, pooling sparse categories."""
    keys = sorted(set(a) | set(b), key=lambda k: -(a.get(k, 0) + b.get(k, 0)))
    rows, pool = [], [0, 0]
    for key in keys:
        pair = [a.get(key, 0), b.get(key, 0)]
        if sum(pair) >= 2 * min_expected:
            rows.append(pair)
        else:
            pool[0] += pair[0]
            pool[1] += pair[1]
    if sum(pool) > 0:
        rows.append(pool)
    if len(rows) < 2:
        return 1.0
    return float(stats.chi2_contingency(np.array(rows).T, correction=False)[1])


def orbit_uniformity_pvalue(counts: Counter, n: int, min_expected: float = 5.0) -> float:
    """Chi-square p-value that counts are uniform within each permutation orbit.

    Under exchangeability every allocation in an orbit of the symmetric
    group has the same probability, so conditional on the orbit total the
    counts are multinomial-uniform.
    """
    sigmas = list(permutations(range(1, n + 1)))
    seen = set()
    stat, dof = 0.0, 0
    for fa in counts:
        if fa in seen:
            continue
        orbit = {apply_permutation(fa, s) for s in sigmas}
        seen |= orbit
        total = sum(counts.get(g, 0) for g in orbit)
        expect = total / len(orbit)
        if len(orbit) < 2 or expect < min_expected:
            continue
        stat += sum((counts.get(g, 0) - expect) ** 2 / expect for g in orbit)
        dof += len(orbit) - 1
    if dof == 0:
        return 1.0
    return float(stats.chi2.sf(stat, dof))
