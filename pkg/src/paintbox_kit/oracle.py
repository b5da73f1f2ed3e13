"""Exhaustive enumeration over small instances.

Every distribution here is a table from canonical allocation to an exact
``Fraction``.  Float inputs are rationalised first (denominators up to
``MAX_DENOMINATOR``) and the result is flagged ``approx``.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from .allocation import (
    FeatureAllocation,
    all_allocations_with_sizes,
    apply_permutation,
    multiplicity_profile,
    ordering_factor,
    restrict,
)
from .paintbox import FeaturePaintbox
from .probability import IbpParams, TwoFeatureParams, is_rational

MAX_DENOMINATOR = 10**6
MAX_CELLS = 16


def rationalize(x) -> tuple[Fraction, bool]:
    """Exact value of x and whether it had to be approximated."""
    if is_rational(x):
        return Fraction(x), False
    f = Fraction(float(x)).limit_denominator(MAX_DENOMINATOR)
    return f, f != Fraction(float(x))


@dataclass
class AllocationDistribution:
    """Probability table over canonical allocations of [n].

    ``normalized`` is False for truncated or rescaled tables; those still
    support every ratio-based check (EFPF form, exchangeability).
    """

    n: int
    probs: dict = field(default_factory=dict)
    approx: bool = False
    normalized: bool = True

    def __post_init__(self):
        self.probs = {fa: p for fa, p in self.probs.items() if p != 0}
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("probabilities must be non-negative")

    def __getitem__(self, fa: FeatureAllocation):
        return self.probs.get(fa, Fraction(0))

    @property
    def total(self):
        return sum(self.probs.values(), Fraction(0))

    def pushforward(self, fn) -> "AllocationDistribution":
        out: dict = defaultdict(Fraction)
        for fa, p in self.probs.items():
            out[fn(fa)] += p
        n = next(iter(out)).n if out else self.n
        return AllocationDistribution(n, dict(out), self.approx, self.normalized)

    def restrict(self, m: int) -> "AllocationDistribution":
        dist = self.pushforward(lambda fa: restrict(fa, m))
        dist.n = m
        return dist

    def to_json(self) -> dict:
        rows = sorted(self.probs.items(), key=lambda kv: (kv[0].k, kv[0].features))
        return {
            "n": self.n,
            "approx": self.approx,
            "normalized": self.normalized,
            "support": [{"features": [list(f) for f in fa.features], "prob": str(p)} for fa, p in rows],
        }


def total_variation(p: dict, q: dict) -> float:
    """Half the L1 distance between two tables (counts must already be normalised)."""
    keys = set(p) | set(q)
    return 0.5 * float(sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys))


# ----------------------------------------------------------- enumerators

def enumerate_binary_matrices(n: int, k: int) -> Iterator[np.ndarray]:
    """All 2**(n*k) binary n x k matrices, each exactly once."""
    if n < 0 or k < 0 or n * k > MAX_CELLS:
        raise ValueError(f"n * k = {n * k} exceeds the enumeration guard of {MAX_CELLS}")
    for bits in product((0, 1), repeat=n * k):
        yield np.array(bits, dtype=np.int8).reshape(n, k)


def _column_features(n: int):
    """Each column mask 0..2**n - 1 as a (possibly empty) feature tuple."""
    return [tuple(i + 1 for i in range(n) if mask >> i & 1) for mask in range(2**n)]


def exact_distribution_finite_freq(freqs: Sequence, n: int) -> AllocationDistribution:
    """Law of the unordered allocation under independent Bernoulli(V_k) columns.

    Sums the probability of every binary matrix inducing each multiset,
    so that distinct matrices collapsing onto one allocation add up.
    """
    k = len(freqs)
    if n * k > MAX_CELLS:
        raise ValueError(f"n * k = {n * k} exceeds the enumeration guard of {MAX_CELLS}")
    exact = [rationalize(v) for v in freqs]
    vs = [v for v, _ in exact]
    for v in vs:
        if not 0 <= v <= 1:
            raise ValueError(f"frequency {v} outside [0, 1]")
    cols = _column_features(n)
    weights = [[v ** len(f) * (1 - v) ** (n - len(f)) for f in cols] for v in vs]
    probs: dict = defaultdict(Fraction)
    for masks in product(range(2**n), repeat=k):
        p = Fraction(1)
        for w, mask in zip(weights, masks):
            p *= w[mask]
            if not p:
                break
        if p:
            fa = FeatureAllocation._trusted(n, tuple(cols[m] for m in masks if m))
            probs[fa] += p
    return AllocationDistribution(n, dict(probs), approx=any(a for _, a in exact))


def exact_distribution_two_feature(params: TwoFeatureParams, n: int) -> AllocationDistribution:
    """Sum over the 4**n label sequences of the four-way categorical rule."""
    if not 1 <= n <= 6:
        raise ValueError("two-feature oracle needs 1 <= n <= 6")
    exact = [rationalize(p) for p in params.as_tuple()]
    p10, p01, p11, p00 = (p for p, _ in exact)
    cats = [({1}, p10), ({2}, p01), ({1, 2}, p11), (set(), p00)]
    probs: dict = defaultdict(Fraction)
    for seq in product(cats, repeat=n):
        p = Fraction(1)
        for _, w in seq:
            p *= w
        if not p:
            continue
        members = {1: [], 2: []}
        for i, (labels, _) in enumerate(seq, start=1):
            for lab in labels:
                members[lab].append(i)
        feats = tuple(tuple(v) for v in members.values() if v)
        probs[FeatureAllocation._trusted(n, feats)] += p
    return AllocationDistribution(n, dict(probs), approx=any(a for _, a in exact))


def exact_distribution_paintbox(pb: FeaturePaintbox, n: int) -> AllocationDistribution:
    """Law of the induced allocation, integrating over the cells of the common refinement."""
    law = pb.label_set_law()
    items = [(z, rationalize(w)) for z, w in law.items()]
    approx = any(a for _, (_, a) in items)
    probs: dict = defaultdict(Fraction)
    for seq in product(items, repeat=n):
        p = Fraction(1)
        for _, (w, _) in seq:
            p *= w
        if not p:
            continue
        members: dict = {}
        for i, (z, _) in enumerate(seq, start=1):
            for lab in z:
                members.setdefault(lab, []).append(i)
        probs[FeatureAllocation._trusted(n, tuple(tuple(v) for v in members.values()))] += p
    return AllocationDistribution(n, dict(probs), approx=approx)


def exact_distribution_efpf_model(freqs: Sequence, singleton_rate, n: int, max_features: int) -> AllocationDistribution:
    """Frequency model plus Pois(rate) singletons per index, up to ``max_features`` features.

    Every probability carries the common factor exp(-n * rate), which is
    divided out so the table stays rational.  Each listed allocation has
    its exact (rescaled) probability, since an allocation with K features
    cannot use more than K singletons; only allocations with more than
    ``max_features`` features are missing.
    """
    rate, approx_rate = rationalize(singleton_rate)
    if rate < 0:
        raise ValueError("singleton rate must be non-negative")
    base = exact_distribution_finite_freq(freqs, n)
    # per-index singleton counts (c_1..c_n) with weight prod rate^c / c!
    probs: dict = defaultdict(Fraction)
    for fa, p in base.probs.items():
        room = max_features - fa.k
        if room < 0:
            continue
        for counts in product(range(room + 1), repeat=n):
            if sum(counts) > room:
                continue
            w = p
            for c in counts:
                w *= rate**c / math.factorial(c)
            if not w:
                continue
            extra = tuple((i + 1,) for i, c in enumerate(counts) for _ in range(c))
            probs[FeatureAllocation._trusted(n, fa.features + extra)] += w
    return AllocationDistribution(n, dict(probs), approx=base.approx or approx_rate, normalized=False)


# --------------------------------------------------------------- checks

def check_exchangeable(dist: AllocationDistribution) -> bool:
    """Whether the table is invariant under every permutation of [n]."""
    if dist.n > 6:
        raise ValueError("exchangeability check is limited to n <= 6")
    for sigma in permutations(range(1, dist.n + 1)):
        for fa, p in dist.probs.items():
            if dist[apply_permutation(fa, sigma)] != p:
                return False
    return True


def check_consistency(dist_m: AllocationDistribution, dist_n: AllocationDistribution) -> bool:
    """Whether restricting ``dist_n`` to [m] reproduces ``dist_m`` exactly.

    Allocations of zero mass are covered because the comparison runs over
    the union of both supports.
    """
    if not dist_m.n < dist_n.n:
        raise ValueError("dist_m must live on a smaller index set than dist_n")
    pushed = dist_n.restrict(dist_m.n)
    keys = set(pushed.probs) | set(dist_m.probs)
    return all(pushed[k] == dist_m[k] for k in keys)


@dataclass(frozen=True)
class EfpfCheck:
    """Outcome of :func:`check_efpf_form`.

    On success ``table`` maps each sorted size profile to its common
    ordered probability.  On failure ``witness`` holds two allocations
    with equal size profiles and ``witness_probs`` their ordered values.
    """

    has_efpf: bool
    table: dict = field(default_factory=dict)
    witness: Optional[tuple[FeatureAllocation, FeatureAllocation]] = None
    witness_probs: Optional[tuple[Fraction, Fraction]] = None


def ordered_prob(dist: AllocationDistribution, fa: FeatureAllocation):
    """Probability of one uniform random ordering of ``fa``."""
    return dist[fa] * ordering_factor(multiplicity_profile(fa))


def check_efpf_form(dist: AllocationDistribution) -> EfpfCheck:
    """Test whether ordered probabilities depend on feature sizes alone.

    For every size profile seen in the support, all allocations of [n]
    with that profile are enumerated (unseen ones have mass 0).  The
    witness pairs the largest and smallest ordered probability of the
    first failing profile.
    """
    if dist.n > 5:
        raise ValueError("EFPF check is limited to n <= 5")
    profiles = sorted({tuple(sorted(fa.sizes)) for fa in dist.probs}, key=lambda s: (len(s), s))
    table = {}
    for sizes in profiles:
        group = sorted(
            ((ordered_prob(dist, fa), fa.features, fa) for fa in all_allocations_with_sizes(dist.n, sizes)),
            key=lambda t: (t[0], t[1]),
        )
        lo, hi = group[0], group[-1]
        if lo[0] != hi[0]:
            return EfpfCheck(False, witness=(hi[2], lo[2]), witness_probs=(hi[0], lo[0]))
        table[sizes] = hi[0]
    return EfpfCheck(True, table=table)


# ------------------------------------------- 3IBP sequential histories

def poisson_cover(rate: float, tail: float) -> int:
    """Smallest K with P(Pois(rate) > K) < tail."""
    k = int(stats.poisson.isf(tail, rate))
    while stats.poisson.sf(k, rate) >= tail:
        k += 1
    while k > 0 and stats.poisson.sf(k - 1, rate) < tail:
        k -= 1
    return k


def ibp_history_distribution(params: IbpParams, n: int, tail: float = 1e-10) -> tuple[dict, float]:
    """Allocation law of the customer recursion, by summing over histories.

    Dishes with the same membership pattern are exchangeable, so a state
    records how many dishes carry each pattern; a customer then joins j of
    the c dishes of a pattern with binomial weight.  Histories are cut at
    the smallest total dish count K whose Poisson tail is below ``tail``
    (the total count is exactly Pois(sum of the new-dish rates)).
    Returns (table of float probabilities, dropped tail mass).
    """
    if not 1 <= n <= 3:
        raise ValueError("history enumeration supports 1 <= n <= 3")
    th, al = float(params.concentration), float(params.discount)
    total_rate = params.total_rate(n)
    k_max = poisson_cover(total_rate, tail)
    # state: tuple of sorted (pattern, count); pattern = tuple of customer indices
    states: dict = {(): 1.0}
    for t in range(1, n + 1):
        nxt: dict = defaultdict(float)
        pois = stats.poisson.pmf(np.arange(k_max + 1), params.new_dish_rate(t))
        for state, p in states.items():
            k_now = sum(c for _, c in state)
            options = [[]]
            for pattern, c in state:
                q = (len(pattern) - al) / (th + t - 1)
                choices = []
                for j in range(c + 1):
                    w = math.comb(c, j) * q**j * (1 - q) ** (c - j)
                    parts = [(pattern + (t,), j), (pattern, c - j)]
                    choices.append((w, parts))
                options = [o + [ch] for o in options for ch in choices]
            for combo in options:
                w = p
                parts: Counter = Counter()
                for wj, pieces in combo:
                    w *= wj
                    for pat, c in pieces:
                        if c:
                            parts[pat] += c
                for new in range(k_max - k_now + 1):
                    pn = w * pois[new]
                    if pn == 0:
                        continue
                    grown = parts.copy()
                    if new:
                        grown[(t,)] += new
                    nxt[tuple(sorted(grown.items()))] += pn
        states = nxt
    table: dict = defaultdict(float)
    for state, p in states.items():
        feats = tuple(pat for pat, c in state for _ in range(c))
        table[FeatureAllocation._trusted(n, feats)] += p
    return dict(table), float(stats.poisson.sf(k_max, total_rate))
