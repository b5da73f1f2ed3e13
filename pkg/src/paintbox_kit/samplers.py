"""Generative samplers for 3IBP, beta-process frequencies, frequency models,
the two-feature model, and frequency models with Poisson singletons.

Every sampler takes an explicit ``numpy.random.Generator`` and consumes it
in a fixed, documented order, so a seed reproduces a run bit for bit.
The ``*_memberships`` variants draw ``size`` replicas at once and consume
the stream exactly as ``size`` successive single draws would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .allocation import FeatureAllocation, LabelSets
from .probability import IbpParams, TwoFeatureParams


@dataclass(frozen=True)
class SeqState:
    """IBP state after ``n_seen`` customers; dish_counts in order of appearance."""

    n_seen: int = 0
    dish_counts: tuple[int, ...] = ()

    @property
    def k_total(self) -> int:
        return len(self.dish_counts)


def ibp_sample_next(state: SeqState, params: IbpParams, rng: np.random.Generator):
    """Seat one more customer.

    Draw order: one uniform per existing dish (label order), then the
    Poisson count of new dishes.  Returns the new state and the customer's
    set of dish labels (1-based, order of appearance).
    """
    n = state.n_seen + 1
    th, al = params.concentration, params.discount
    k = state.k_total
    counts = list(state.dish_counts)
    taken = set()
    if k:
        u = rng.random(k)
        denom = th + n - 1
        for j in range(k):
            if u[j] < (counts[j] - al) / denom:
                counts[j] += 1
                taken.add(j + 1)
    new = int(rng.poisson(params.new_dish_rate(n)))
    taken.update(range(k + 1, k + new + 1))
    counts.extend([1] * new)
    return SeqState(n, tuple(counts)), frozenset(taken)


def ibp_sample_allocation(params: IbpParams, n: int, rng: np.random.Generator) -> FeatureAllocation:
    """Seat customers 1..n and return the unordered allocation."""
    if n < 1:
        raise ValueError("n must be positive")
    state = SeqState()
    sets = []
    for _ in range(n):
        state, dishes = ibp_sample_next(state, params, rng)
        sets.append(dishes)
    return LabelSets(tuple(sets)).to_allocation()


# ------------------------------------------------------ frequency models

@dataclass(frozen=True)
class FrequencyModel:
    """Fixed feature frequencies with optional labels.

    ``tail_mass`` bounds the total frequency of any features left out of
    ``freqs`` (0 for a genuinely finite model).  ``math.inf`` marks an
    uncertified tail, which samplers refuse.
    """

    freqs: tuple[float, ...] = ()
    labels: Optional[tuple[float, ...]] = None
    tail_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "freqs", tuple(self.freqs))
        for v in self.freqs:
            if not 0 <= v <= 1:
                raise ValueError(f"frequency {v} outside [0, 1]")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(self.freqs) or len(set(labels)) != len(labels):
                raise ValueError("labels must be distinct, one per frequency")
            object.__setattr__(self, "labels", labels)
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be non-negative")

    def check_summable(self):
        if not math.isfinite(self.tail_mass):
            raise ValueError("frequency model has no certified tail bound")


@dataclass(frozen=True)
class BetaProcessDraw:
    model: FrequencyModel
    rounds: int
    atoms_per_round: tuple[int, ...]


def beta_process_expected_mass(params: IbpParams, rounds: int) -> np.ndarray:
    """Expected frequency mass contributed by each of rounds 1..``rounds``."""
    th, al = params.concentration, params.discount
    m = np.arange(1, rounds + 1, dtype=float)
    log_rate = params._log_base() + gammaln(th + al - 1 + m) - gammaln(th + m)
    return np.exp(log_rate) * (1 - al) / (th + m)


def sample_3bp_frequencies(params: IbpParams, truncation: int, rng: np.random.Generator) -> BetaProcessDraw:
    """Three-parameter beta process atoms from the first ``truncation`` rounds.

    Round m contributes Pois(C(m)) atoms, each Beta(1 - discount,
    concentration + m - 1 + discount); with that shape the expected total
    mass is exactly ``params.mass`` and customer 1 sees Pois(mass) features.
    ``model.tail_mass`` is the expected mass of all later rounds, which
    telescopes to C(truncation + 1).
    Draw order: all round counts, then all Beta variates, then labels.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1 round")
    th, al = params.concentration, params.discount
    m = np.arange(1, truncation + 1, dtype=float)
    rates = np.exp(params._log_base() + gammaln(th + al - 1 + m) - gammaln(th + m))
    counts = rng.poisson(rates)
    rounds_of_atoms = np.repeat(m, counts)
    freqs = rng.beta(1 - al, th + rounds_of_atoms - 1 + al) if rounds_of_atoms.size else np.empty(0)
    labels = rng.random(freqs.size)
    residual = params.new_dish_rate(truncation + 1)
    model = FrequencyModel(tuple(float(v) for v in freqs), tuple(float(x) for x in labels), residual)
    return BetaProcessDraw(model, truncation, tuple(int(c) for c in counts))


def frequency_model_memberships(model: FrequencyModel, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Bernoulli membership arrays of shape (size, n, K), drawn row by row."""
    model.check_summable()
    v = np.asarray(model.freqs, dtype=float)
    return rng.random((size, n, v.size)) < v


def _allocation_from_membership(z: np.ndarray) -> FeatureAllocation:
    n = z.shape[0]
    feats = []
    for col in z.T:
        idx = np.flatnonzero(col)
        if idx.size:
            feats.append(tuple(int(i) + 1 for i in idx))
    return FeatureAllocation._trusted(n, tuple(feats))


def frequency_model_sample(model: FrequencyModel, n: int, rng: np.random.Generator) -> FeatureAllocation:
    return _allocation_from_membership(frequency_model_memberships(model, n, rng)[0])


def two_feature_memberships(params: TwoFeatureParams, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """One uniform per index picks {1}, {2}, {1,2} or {} by inverse CDF."""
    cum = np.cumsum([float(p) for p in params.as_tuple()])
    cat = np.searchsorted(cum, rng.random((size, n)), side="right")
    cat = np.minimum(cat, 3)
    z = np.zeros((size, n, 2), dtype=bool)
    z[..., 0] = (cat == 0) | (cat == 2)
    z[..., 1] = (cat == 1) | (cat == 2)
    return z


def two_feature_sample(params: TwoFeatureParams, n: int, rng: np.random.Generator) -> FeatureAllocation:
    return _allocation_from_membership(two_feature_memberships(params, n, rng)[0])


# ------------------------------------------- frequencies + singletons

@dataclass(frozen=True)
class EfpfModel:
    """Frequency model plus an independent Pois(singleton_rate) count of {i} features per index.

    ``joint``, when given, draws (frequency model, rate) jointly per
    replica; otherwise both are the fixed values above.
    """

    freq_model: FrequencyModel = field(default_factory=FrequencyModel)
    singleton_rate: float = 0.0
    joint: Optional[Callable[[np.random.Generator], tuple[FrequencyModel, float]]] = None

    def __post_init__(self):
        if self.singleton_rate < 0:
            raise ValueError("singleton rate must be non-negative")


def _with_singletons(fa: FeatureAllocation, counts: Sequence[int]) -> FeatureAllocation:
    extra = tuple((i + 1,) for i, c in enumerate(counts) for _ in range(int(c)))
    return FeatureAllocation._trusted(fa.n, fa.features + extra)


def efpf_model_sample(model: EfpfModel, n: int, rng: np.random.Generator) -> FeatureAllocation:
    """Frequency-model draw, then per-index Poisson singleton counts."""
    freq_model, rate = (model.joint(rng) if model.joint else (model.freq_model, model.singleton_rate))
    if rate < 0:
        raise ValueError("singleton rate must be non-negative")
    fa = frequency_model_sample(freq_model, n, rng)
    if rate == 0:
        return fa
    return _with_singletons(fa, rng.poisson(rate, size=n))


def efpf_model_sample_pooled(model: EfpfModel, n: int, rng: np.random.Generator) -> FeatureAllocation:
    """Same law via Pois(n * rate) singletons, each placed on a uniform index."""
    freq_model, rate = (model.joint(rng) if model.joint else (model.freq_model, model.singleton_rate))
    fa = frequency_model_sample(freq_model, n, rng)
    total = int(rng.poisson(n * rate))
    if total == 0:
        return fa
    return _with_singletons(fa, np.bincount(rng.integers(0, n, size=total), minlength=n))


def efpf_model_singleton_counts(model: EfpfModel, n: int, rng: np.random.Generator, size: int, pooled: bool = False):
    """Batch draws for Monte Carlo: (memberships, singleton counts).

    Fixed-parameter models only.  With ``pooled`` the counts come from a
    Pois(n * rate) total split multinomially over the indices.
    """
    if model.joint is not None:
        raise ValueError("batch draws need fixed model parameters")
    z = frequency_model_memberships(model.freq_model, n, rng, size)
    rate = model.singleton_rate
    if pooled:
        totals = rng.poisson(n * rate, size=size)
        counts = rng.multinomial(totals, np.full(n, 1.0 / n))
    else:
        counts = rng.poisson(rate, size=(size, n))
    return z, counts
