"""Exact ordered/unordered feature-allocation probabilities.

Values come back as :class:`EfpfValue`.  Whenever every input is an
``int`` or ``Fraction`` and the formula is rational, the exact value is
carried alongside the log-probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from numbers import Rational
from typing import Optional, Sequence

from .allocation import (
    FeatureAllocation,
    OrderedFeatureAllocation,
    multiplicity_profile,
    ordering_factor,
)


def is_rational(*xs) -> bool:
    return all(isinstance(x, Rational) and not isinstance(x, bool) for x in xs)


def _log(x) -> float:
    if x == 0:
        return -math.inf
    if isinstance(x, Fraction):
        # avoids float overflow/underflow for huge numerators and denominators
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


@dataclass(frozen=True)
class EfpfValue:
    log_prob: float
    exact: Optional[Fraction] = None

    @classmethod
    def from_value(cls, value) -> "EfpfValue":
        if isinstance(value, Rational):
            return cls(_log(value), Fraction(value))
        return cls(_log(value))

    @property
    def prob(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return math.exp(self.log_prob)

    def scaled(self, factor) -> "EfpfValue":
        """Multiply by a positive rational factor."""
        exact = None if self.exact is None else self.exact * Fraction(factor)
        return EfpfValue(self.log_prob + _log(Fraction(factor)), exact)


# ---------------------------------------------------------------- 3IBP

@dataclass(frozen=True)
class IbpParams:
    """Three-parameter IBP: mass > 0, concentration > 0, discount in [0, 1)."""

    mass: float
    concentration: float = 1.0
    discount: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.concentration > 0:
            raise ValueError(f"concentration must be positive, got {self.concentration}")
        if not 0 <= self.discount < 1:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")

    def _log_base(self) -> float:
        th, al = float(self.concentration), float(self.discount)
        return math.log(self.mass) + math.lgamma(th + 1) - math.lgamma(th + al)

    def new_dish_rate(self, m: int) -> float:
        """Poisson rate of new dishes for customer m (the C(m) sequence)."""
        th, al = float(self.concentration), float(self.discount)
        return math.exp(self._log_base() + math.lgamma(th + al - 1 + m) - math.lgamma(th + m))

    def total_rate(self, n: int) -> float:
        return math.fsum(self.new_dish_rate(m) for m in range(1, n + 1))


def ibp_efpf(params: IbpParams, n: int, sizes: Sequence[int]) -> EfpfValue:
    """Probability of a uniformly ordered 3IBP allocation of [n] with the given feature sizes."""
    if n < 1:
        raise ValueError("n must be positive")
    for m in sizes:
        if not 1 <= m <= n:
            raise ValueError(f"feature size {m} outside 1..{n}")
    th, al = float(params.concentration), float(params.discount)
    k = len(sizes)
    lp = -math.lgamma(k + 1) + k * params._log_base() - params.total_rate(n)
    per = -math.lgamma(1 - al) - math.lgamma(th + n)
    lp += math.fsum(math.lgamma(m - al) + math.lgamma(th + n - m + al) + per for m in sizes)
    return EfpfValue(lp)


def ibp_unordered_prob(params: IbpParams, fa: FeatureAllocation) -> EfpfValue:
    ordered = ibp_efpf(params, fa.n, fa.sizes)
    return ordered.scaled(1 / ordering_factor(multiplicity_profile(fa)))


# ---------------------------------------------------- two-feature models

def bernoulli_two_feature_efpf(qa, qb, n: int, sizes: Sequence[int]) -> EfpfValue:
    """Ordered probability for two labelled Bernoulli(qa), Bernoulli(qb) features.

    A zero size stands for a feature that turned out empty.
    """
    m1, m2 = sizes
    for m in (m1, m2):
        if not 0 <= m <= n:
            raise ValueError(f"feature size {m} outside 0..{n}")
    if not (0 < qa < 1 and 0 < qb < 1):
        raise ValueError("qa and qb must lie in (0, 1)")
    if is_rational(qa, qb):
        qa, qb = Fraction(qa), Fraction(qb)
        half = Fraction(1, 2)
    else:
        half = 0.5

    def term(x, y):
        return qa ** x * (1 - qa) ** (n - x) * qb ** y * (1 - qb) ** (n - y)

    return EfpfValue.from_value(half * term(m1, m2) + half * term(m2, m1))


@dataclass(frozen=True)
class TwoFeatureParams:
    """Per-index probabilities of the label sets {1}, {2}, {1,2}, {} ."""

    p10: float
    p01: float
    p11: float
    p00: float

    def __post_init__(self):
        ps = (self.p10, self.p01, self.p11, self.p00)
        if any(p < 0 for p in ps):
            raise ValueError("two-feature probabilities must be non-negative")
        total = sum(ps)
        if is_rational(*ps):
            if total != 1:
                raise ValueError(f"two-feature probabilities sum to {total}, not 1")
        elif abs(total - 1) > 1e-12:
            raise ValueError(f"two-feature probabilities sum to {total}, not 1")

    @property
    def q1(self):
        return self.p10 + self.p11

    @property
    def q2(self):
        return self.p01 + self.p11

    def as_tuple(self):
        return (self.p10, self.p01, self.p11, self.p00)


def _two_feature_labeled(params: TwoFeatureParams, n: int, f1, f2):
    s1, s2 = set(f1), set(f2)
    c10 = c01 = c11 = c00 = 0
    for i in range(1, n + 1):
        a, b = i in s1, i in s2
        if a and b:
            c11 += 1
        elif a:
            c10 += 1
        elif b:
            c01 += 1
        else:
            c00 += 1
    return params.p10 ** c10 * params.p01 ** c01 * params.p11 ** c11 * params.p00 ** c00


def two_feature_ordered_prob(params: TwoFeatureParams, ordered: OrderedFeatureAllocation) -> EfpfValue:
    """Probability of an ordered allocation (at most two features) under the two-feature model.

    The features are padded with empty sets to exactly two labels.  Summing
    the labelled probability over both label assignments counts each
    distinct assignment ``stab`` times, which gives the unordered
    probability; the ordering factor then converts it to the ordered one.
    For K = 2 this is the plain average over the two assignments.
    """
    if ordered.k > 2:
        raise ValueError(f"two-feature model has at most 2 features, got {ordered.k}")
    padded = list(ordered.features) + [()] * (2 - ordered.k)
    if is_rational(*params.as_tuple()):
        params = TwoFeatureParams(*(Fraction(p) for p in params.as_tuple()))
    total = sum(_two_feature_labeled(params, ordered.n, *perm) for perm in permutations(padded))
    stab = 2 if padded[0] == padded[1] else 1
    factor = ordering_factor(multiplicity_profile(ordered.unordered()))
    if isinstance(total, Fraction):
        return EfpfValue.from_value(total / stab * factor)
    return EfpfValue.from_value(total / stab * float(factor))


def two_feature_unordered_prob(params: TwoFeatureParams, fa: FeatureAllocation) -> EfpfValue:
    ordered = two_feature_ordered_prob(params, OrderedFeatureAllocation(fa.n, fa.features))
    return ordered.scaled(1 / ordering_factor(multiplicity_profile(fa)))


def is_frequency_factorizable(params: TwoFeatureParams, tol: float = 1e-9) -> bool:
    """Whether p10*p01 == p11*p00 within ``tol`` (equivalently p11 == q1*q2)."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return abs(params.p10 * params.p01 - params.p11 * params.p00) <= tol


# ------------------------------------------------- frequency models

def _check_freqs(freqs):
    for v in freqs:
        if not 0 <= v <= 1:
            raise ValueError(f"frequency {v} outside [0, 1]")


def finite_frequency_efpf(freqs: Sequence, n: int, sizes: Sequence[int]) -> EfpfValue:
    """Labelled-feature probability under fixed frequencies.

    Feature k (for k < len(sizes)) has ``sizes[k]`` members; all later
    features are empty.  Sizes of zero are allowed, and 0**0 == 1.
    """
    _check_freqs(freqs)
    if len(sizes) > len(freqs):
        raise ValueError("more sizes than frequencies")
    for m in sizes:
        if not 0 <= m <= n:
            raise ValueError(f"feature size {m} outside 0..{n}")
    if is_rational(*freqs):
        freqs = [Fraction(v) for v in freqs]
    value = 1
    for k, v in enumerate(freqs):
        m = sizes[k] if k < len(sizes) else 0
        value = value * v ** m * (1 - v) ** (n - m)
    return EfpfValue.from_value(value)


def frequency_model_efpf(freqs: Sequence, n: int, sizes: Sequence[int]) -> EfpfValue:
    """EFPF of the unlabelled allocation generated by fixed frequencies.

    Sums the labelled probability over injective feature-to-frequency
    assignments and divides by K!.
    """
    _check_freqs(freqs)
    for m in sizes:
        if not 1 <= m <= n:
            raise ValueError(f"feature size {m} outside 1..{n}")
    k = len(sizes)
    if k > len(freqs):
        return EfpfValue(-math.inf, Fraction(0) if is_rational(*freqs) else None)
    exact = is_rational(*freqs)
    vs = [Fraction(v) for v in freqs] if exact else list(freqs)
    empty = [(1 - v) ** n for v in vs]
    total = 0
    for assign in permutations(range(len(vs)), k):
        term = 1
        for m, i in zip(sizes, assign):
            term = term * vs[i] ** m * (1 - vs[i]) ** (n - m)
        rest = set(range(len(vs))).difference(assign)
        for i in rest:
            term = term * empty[i]
        total = total + term
    if exact:
        return EfpfValue.from_value(Fraction(total) / math.factorial(k))
    return EfpfValue.from_value(total / math.factorial(k))


def efpf_model_efpf(freqs: Sequence[float], singleton_rate: float, n: int, sizes: Sequence[int]) -> EfpfValue:
    """EFPF of fixed frequencies plus Pois(rate) singleton features per index.

    Every subset of the size-one features may be attributed to the
    Poisson component.  Those J singletons arise from Pois(n * rate)
    draws placed on indices with probability n**-J, and J! draw orders
    map onto the same positions.
    """
    if singleton_rate < 0:
        raise ValueError("singleton rate must be non-negative")
    singles = [k for k, m in enumerate(sizes) if m == 1]
    lam = n * float(singleton_rate)
    total = 0.0
    for j in range(len(singles) + 1):
        for chosen in combinations(singles, j):
            rest = [m for k, m in enumerate(sizes) if k not in chosen]
            freq_part = frequency_model_efpf(freqs, n, rest).prob * math.factorial(len(rest))
            if lam == 0:
                pois = 1.0 if j == 0 else 0.0
            else:
                pois = math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))
            total += pois * n ** -j * math.factorial(j) * freq_part
    return EfpfValue.from_value(total / math.factorial(len(sizes)))
