"""Feature allocations of [n]: canonical form, restriction, labeling, matrices.

Indices are 1-based throughout, matching the usual ``[n] = {1, ..., n}``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product
from typing import Iterable, Sequence

import numpy as np

Feature = tuple[int, ...]


def _feature_key(f: Feature):
    return (f[0], len(f), f)


def canonical_features(features: Iterable[Iterable[int]]) -> tuple[Feature, ...]:
    """Sort each feature, then sort the multiset by (min, size, lex)."""
    feats = [tuple(sorted(f)) for f in features]
    if not all(feats):
        raise ValueError("features must be non-empty")
    feats.sort(key=_feature_key)
    return tuple(feats)


@dataclass(frozen=True)
class FeatureAllocation:
    """A multiset of non-empty subsets of {1..n}.

    Features are kept in canonical order, so equal multisets are equal
    (and hash equal) as dataclasses.  Duplicate features are kept.
    """

    n: int
    features: tuple[Feature, ...] = ()

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
        feats = canonical_features(self.features)
        for f in feats:
            if f[0] < 1 or f[-1] > self.n:
                raise ValueError(f"feature {f} is not a subset of [1..{self.n}]")
            if len(set(f)) != len(f):
                raise ValueError(f"feature {f} repeats an index")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "features", feats)

    @classmethod
    def _trusted(cls, n: int, features: tuple[Feature, ...]) -> "FeatureAllocation":
        # Skips validation; callers pass sorted, non-empty, in-range features.
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "features", tuple(sorted(features, key=_feature_key)))
        return obj

    @property
    def k(self) -> int:
        return len(self.features)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.features)

    def is_partition(self) -> bool:
        """True when every index of [n] lies in exactly one feature."""
        seen = Counter(i for f in self.features for i in f)
        return all(seen[i] == 1 for i in range(1, self.n + 1))

    def to_json(self) -> dict:
        return {"n": self.n, "features": [list(f) for f in self.features]}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureAllocation":
        return cls(int(obj["n"]), tuple(tuple(int(i) for i in f) for f in obj["features"]))

    def __str__(self):
        body = ",".join("{" + ",".join(map(str, f)) + "}" for f in self.features)
        return f"{{{body}}} over [{self.n}]"


@dataclass(frozen=True)
class OrderedFeatureAllocation:
    """A sequence of non-empty subsets of {1..n}; order is significant."""

    n: int
    features: tuple[Feature, ...] = ()

    def __post_init__(self):
        feats = tuple(tuple(sorted(f)) for f in self.features)
        # validates through the unordered constructor
        FeatureAllocation(self.n, feats)
        object.__setattr__(self, "features", feats)

    @property
    def k(self) -> int:
        return len(self.features)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.features)

    def unordered(self) -> FeatureAllocation:
        return FeatureAllocation(self.n, self.features)


@dataclass(frozen=True)
class MultiplicityProfile:
    k_total: int
    h_distinct: int
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        m = self.multiplicities
        if sum(m) != self.k_total or len(m) != self.h_distinct:
            raise ValueError("multiplicities must sum to k_total with h_distinct entries")
        if any(x <= 0 for x in m) or any(a < b for a, b in zip(m, m[1:])):
            raise ValueError("multiplicities must be positive and non-increasing")


@dataclass(frozen=True)
class LabelSets:
    """Per-index label collections Z_1..Z_n.

    Labels are positive integers for order-of-appearance labelings and
    reals in [0, 1] for uniform random labelings.
    """

    sets: tuple[frozenset, ...]

    @property
    def n(self) -> int:
        return len(self.sets)

    def labels(self) -> list:
        return sorted(set().union(*self.sets)) if self.sets else []

    def to_allocation(self) -> FeatureAllocation:
        """Recover the allocation: one feature {i : label in Z_i} per label."""
        members: dict = {}
        for i, z in enumerate(self.sets, start=1):
            for lab in z:
                members.setdefault(lab, []).append(i)
        return FeatureAllocation._trusted(self.n, tuple(tuple(v) for v in members.values()))


def allocation_from_label_sets(sets: Sequence[Iterable]) -> FeatureAllocation:
    return LabelSets(tuple(frozenset(z) for z in sets)).to_allocation()


def restrict(fa: FeatureAllocation, m: int) -> FeatureAllocation:
    """Restriction of ``fa`` to [m]: intersect every feature with [m], drop empties."""
    if not 1 <= m <= fa.n:
        raise ValueError(f"restriction size {m} outside 1..{fa.n}")
    if m == fa.n:
        return fa
    out = []
    for f in fa.features:
        g = tuple(i for i in f if i <= m)
        if g:
            out.append(g)
    return FeatureAllocation._trusted(m, tuple(out))


def is_extension(fa_n: FeatureAllocation, fa_m: FeatureAllocation) -> bool:
    if fa_m.n > fa_n.n:
        raise ValueError(f"cannot extend an allocation of [{fa_m.n}] to [{fa_n.n}]")
    return restrict(fa_n, fa_m.n) == fa_m


def apply_permutation(fa: FeatureAllocation, sigma: Sequence[int]) -> FeatureAllocation:
    """Relabel indices: index i becomes ``sigma[i-1]``.

    ``sigma`` is given in one-line notation over {1..n}.
    """
    if sorted(sigma) != list(range(1, fa.n + 1)):
        raise ValueError(f"sigma is not a permutation of 1..{fa.n}: {list(sigma)}")
    return FeatureAllocation._trusted(
        fa.n, tuple(tuple(sorted(sigma[i - 1] for i in f)) for f in fa.features)
    )


def multiplicity_profile(fa: FeatureAllocation) -> MultiplicityProfile:
    mult = sorted(Counter(fa.features).values(), reverse=True)
    return MultiplicityProfile(fa.k, len(mult), tuple(mult))


def ordering_factor(profile: MultiplicityProfile) -> Fraction:
    """Inverse multinomial coefficient: prod(mult!) / K!.

    Multiplying an unordered allocation probability by this gives the
    probability of any one of its uniform random orderings.
    """
    num = math.prod(math.factorial(m) for m in profile.multiplicities)
    return Fraction(num, math.factorial(profile.k_total))


def order_of_appearance(fa: FeatureAllocation, tie_break: Sequence[float]) -> tuple[Feature, ...]:
    """Features listed by order of appearance (A_1, A_2, ...).

    Scanning indices 1..n, the features first containing index m receive
    the next unused tie-break values, paired in canonical order, and are
    labeled in increasing order of those values.
    """
    k = fa.k
    if len(tie_break) < k:
        raise ValueError(f"need {k} tie-break values, got {len(tie_break)}")
    if len(set(tie_break[:k])) != k:
        raise ValueError("tie-break values must be distinct")
    first = {}
    for pos, f in enumerate(fa.features):
        first.setdefault(f[0], []).append(pos)
    ordered = []
    used = 0
    for m in range(1, fa.n + 1):
        new = first.get(m)
        if not new:
            continue
        us = tie_break[used:used + len(new)]
        used += len(new)
        for _, pos in sorted(zip(us, new)):
            ordered.append(fa.features[pos])
    return tuple(ordered)


def order_of_appearance_labels(fa: FeatureAllocation, tie_break: Sequence[float]) -> LabelSets:
    feats = order_of_appearance(fa, tie_break)
    sets = [set() for _ in range(fa.n)]
    for k, f in enumerate(feats, start=1):
        for i in f:
            sets[i - 1].add(k)
    return LabelSets(tuple(frozenset(z) for z in sets))


def uniform_random_labels(labels: LabelSets, rho: Sequence[float]) -> LabelSets:
    """Replace order-of-appearance label k by ``rho[k-1]``."""
    k = max(labels.labels(), default=0)
    if len(rho) < k:
        raise ValueError(f"need {k} uniform labels, got {len(rho)}")
    return LabelSets(tuple(frozenset(rho[j - 1] for j in z) for z in labels.sets))


def ordered_by_labels(n: int, features: Sequence[Feature], rho: Sequence[float]) -> OrderedFeatureAllocation:
    """Order ``features`` by increasing label; ``rho[k]`` tags ``features[k]``."""
    if len(rho) < len(features):
        raise ValueError("one label per feature is required")
    order = sorted(range(len(features)), key=lambda k: rho[k])
    return OrderedFeatureAllocation(n, tuple(features[k] for k in order))


def uniform_random_ordering(fa: FeatureAllocation, rng: np.random.Generator) -> OrderedFeatureAllocation:
    """Uniformly random ordering: sort the features by iid uniform labels."""
    rho = rng.random(fa.k)
    return ordered_by_labels(fa.n, fa.features, rho)


def to_binary_matrix(labels: LabelSets) -> np.ndarray:
    """n x K 0/1 matrix with entry (i, k) = 1 iff k is in Z_i (1-based k)."""
    k = max(labels.labels(), default=0)
    mat = np.zeros((labels.n, k), dtype=np.int8)
    for i, z in enumerate(labels.sets):
        for lab in z:
            mat[i, lab - 1] = 1
    return mat


def allocation_from_matrix(mat) -> FeatureAllocation:
    """Allocation induced by the non-empty columns of a 0/1 matrix."""
    mat = np.asarray(mat)
    n = mat.shape[0]
    feats = []
    for col in mat.T:
        f = tuple(int(i) + 1 for i in np.flatnonzero(col))
        if f:
            feats.append(f)
    return FeatureAllocation._trusted(n, tuple(feats))


def all_allocations_with_sizes(n: int, sizes: Sequence[int]):
    """Every allocation of [n] whose feature sizes form the multiset ``sizes``."""
    by_size = Counter(sizes)
    groups = []
    for size, count in sorted(by_size.items()):
        subsets = list(combinations(range(1, n + 1), size))
        groups.append(list(combinations_with_replacement(subsets, count)))
    for choice in product(*groups):
        yield FeatureAllocation._trusted(n, tuple(f for grp in choice for f in grp))
