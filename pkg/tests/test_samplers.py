import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import EX5
from paintbox_kit.allocation import FeatureAllocation, restrict
from paintbox_kit.montecarlo import (
    binomial_z,
    chi_square_homogeneity,
    mask_counts,
    orbit_uniformity_pvalue,
    tally_codes,
)
from paintbox_kit.oracle import exact_distribution_finite_freq, ibp_history_distribution
from paintbox_kit.probability import IbpParams, TwoFeatureParams, ibp_unordered_prob
from paintbox_kit.samplers import (
    EfpfModel,
    FrequencyModel,
    SeqState,
    beta_process_expected_mass,
    efpf_model_sample,
    efpf_model_sample_pooled,
    efpf_model_singleton_counts,
    frequency_model_memberships,
    frequency_model_sample,
    ibp_sample_allocation,
    ibp_sample_next,
    sample_3bp_frequencies,
    two_feature_memberships,
    two_feature_sample,
)

IBP1 = IbpParams(1.0, 1.0, 0.0)


def gof_pvalue(counts: Counter, probs: dict, total: int, min_expected=5.0) -> float:
    """Chi-square goodness of fit, pooling cells with small expectation."""
    stat, cells, pool_obs, pool_exp = 0.0, 0, 0, 0.0
    for key, p in probs.items():
        e = total * float(p)
        if e >= min_expected:
            stat += (counts.get(key, 0) - e) ** 2 / e
            cells += 1
        else:
            pool_obs += counts.get(key, 0)
            pool_exp += e
    pool_obs += sum(c for k, c in counts.items() if k not in probs)
    pool_exp = total - sum(total * float(p) for k, p in probs.items() if total * float(p) >= min_expected)
    if pool_exp > 0:
        stat += (pool_obs - pool_exp) ** 2 / pool_exp
        cells += 1
    return float(stats.chi2.sf(stat, cells - 1))


class TestIbpSequential:
    def test_state_invariants(self, rng):
        state = SeqState()
        for n in range(1, 8):
            state, dishes = ibp_sample_next(state, IbpParams(2.0, 1.5, 0.2), rng)
            assert state.n_seen == n
            assert all(1 <= c <= n for c in state.dish_counts)
            assert state.k_total == len(state.dish_counts)
            assert dishes <= set(range(1, state.k_total + 1))

    def test_first_customer_empty_probability(self, rng):
        draws = 40_000
        empty = sum(not ibp_sample_next(SeqState(), IBP1, rng)[1] for _ in range(draws))
        assert abs(binomial_z(empty, draws, math.exp(-1))) < 3

    def test_first_customer_is_poisson(self, rng):
        draws = 40_000
        ks = Counter(ibp_sample_allocation(IbpParams(1.7), 1, rng).k for _ in range(draws))
        probs = {k: stats.poisson.pmf(k, 1.7) for k in range(12)}
        assert gof_pvalue(ks, probs, draws) > 1e-3

    def test_reproducible(self):
        a = [ibp_sample_allocation(IBP1, 4, np.random.default_rng(7)) for _ in range(2)]
        assert a[0] == a[1]

    def test_vanishing_mass(self, rng):
        p = IbpParams(1e-9)
        assert all(ibp_sample_allocation(p, 5, rng).k == 0 for _ in range(200))

    def test_matches_closed_form(self, rng):
        draws = 100_000
        counts = Counter(ibp_sample_allocation(IBP1, 2, rng) for _ in range(draws))
        table, _ = ibp_history_distribution(IBP1, 2)
        probs = {fa: ibp_unordered_prob(IBP1, fa).prob for fa in table}
        assert gof_pvalue(counts, probs, draws) > 1e-3

    def test_restriction_consistency(self, rng):
        p = IbpParams(1.2, 0.8, 0.3)
        draws = 60_000
        restricted = Counter(restrict(ibp_sample_allocation(p, 3, rng), 2) for _ in range(draws))
        direct = Counter(ibp_sample_allocation(p, 2, rng) for _ in range(draws))
        assert chi_square_homogeneity(restricted, direct) > 1e-3

    def test_exchangeable_n3(self, rng):
        draws = 1_000_000
        counts = Counter(ibp_sample_allocation(IbpParams(1.5, 1.0, 0.25), 3, rng) for _ in range(draws))
        assert orbit_uniformity_pvalue(counts, 3) > 1e-3


class TestBetaProcess:
    def test_truncation_domain(self, rng):
        with pytest.raises(ValueError):
            sample_3bp_frequencies(IBP1, 0, rng)

    @pytest.mark.parametrize("p", [IBP1, IbpParams(2.0, 0.5, 0.4), IbpParams(0.7, 3.0, 0.0)])
    def test_expected_mass_telescopes(self, p):
        rounds = 50
        head = beta_process_expected_mass(p, rounds).sum()
        assert head + p.new_dish_rate(rounds + 1) == pytest.approx(p.mass, rel=1e-12)

    def test_residual_reported(self, rng):
        draw = sample_3bp_frequencies(IBP1, 10, rng)
        assert draw.model.tail_mass == pytest.approx(1 / 11)
        assert len(draw.model.freqs) == sum(draw.atoms_per_round)
        assert len(set(draw.model.labels)) == len(draw.model.freqs)

    def test_harmonic_atom_count(self, rng):
        rounds, reps = 8, 20_000
        totals = np.array([len(sample_3bp_frequencies(IBP1, rounds, rng).model.freqs) for _ in range(reps)])
        mean = sum(1 / n for n in range(1, rounds + 1))
        assert abs(totals.mean() - mean) < 3 * math.sqrt(mean / reps)

    def test_round_one_beta(self, rng):
        p = IbpParams(3.0, 2.0, 0.3)
        vals = np.concatenate([sample_3bp_frequencies(p, 1, rng).model.freqs for _ in range(20_000)])
        a, b = 1 - p.discount, p.concentration + p.discount
        assert stats.kstest(vals, stats.beta(a, b).cdf).pvalue > 1e-3

    def test_customers_match_ibp(self, rng):
        # Bernoulli customers on beta-process frequencies reproduce the 3IBP law
        p = IbpParams(1.0, 1.0, 0.0)
        reps = 30_000
        counts = Counter(
            frequency_model_sample(sample_3bp_frequencies(p, 1000, rng).model, 2, rng) for _ in range(reps)
        )
        table, _ = ibp_history_distribution(p, 2)
        probs = {fa: ibp_unordered_prob(p, fa).prob for fa in table}
        assert gof_pvalue(counts, probs, reps) > 1e-3


class TestFrequencyModel:
    def test_empty_model(self, rng):
        assert frequency_model_sample(FrequencyModel(), 4, rng) == FeatureAllocation(4)

    def test_certain_feature(self, rng):
        assert frequency_model_sample(FrequencyModel((1.0,)), 3, rng) == FeatureAllocation(3, ((1, 2, 3),))

    def test_uncertified_tail(self, rng):
        with pytest.raises(ValueError):
            frequency_model_sample(FrequencyModel((0.5,), tail_mass=math.inf), 3, rng)

    def test_validation(self):
        with pytest.raises(ValueError):
            FrequencyModel((1.2,))
        with pytest.raises(ValueError):
            FrequencyModel((0.2, 0.3), labels=(0.5, 0.5))

    def test_batch_matches_single_draws(self):
        m = FrequencyModel((0.3, 0.6, 0.1))
        batch = frequency_model_memberships(m, 4, np.random.default_rng(3), size=6)
        rng = np.random.default_rng(3)
        singles = np.concatenate([frequency_model_memberships(m, 4, rng) for _ in range(6)])
        assert np.array_equal(batch, singles)

    def test_matches_oracle(self, rng):
        freqs = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 5))
        draws = 200_000
        counts = tally_codes(mask_counts(frequency_model_memberships(FrequencyModel(freqs), 3, rng, draws)), 3)
        exact = exact_distribution_finite_freq(freqs, 3)
        assert gof_pvalue(counts, exact.probs, draws) > 1e-3

    def test_exchangeable_n3(self, rng):
        draws = 1_000_000
        z = frequency_model_memberships(FrequencyModel((0.5, 0.3, 0.15)), 3, rng, draws)
        assert orbit_uniformity_pvalue(tally_codes(mask_counts(z), 3), 3) > 1e-3

    def test_columns_iid_bernoulli(self, rng):
        # regularity proxy: every feature column is an iid Bernoulli(v) vector
        freqs = (0.6, 0.25)
        draws, n = 200_000, 3
        z = efpf_model_singleton_counts(EfpfModel(FrequencyModel(freqs), 0.0), n, rng, draws)[0]
        weights = 1 << np.arange(n)
        for k, v in enumerate(freqs):
            masks = z[:, :, k].astype(int) @ weights
            counts = Counter(masks.tolist())
            probs = {m: v ** bin(m).count("1") * (1 - v) ** (n - bin(m).count("1")) for m in range(2**n)}
            assert gof_pvalue(counts, probs, draws) > 1e-3


class TestTwoFeatureSampler:
    def test_all_shared(self, rng):
        p = TwoFeatureParams(0, 0, 1, 0)
        assert two_feature_sample(p, 3, rng) == FeatureAllocation(3, ((1, 2, 3), (1, 2, 3)))

    def test_all_empty(self, rng):
        assert two_feature_sample(TwoFeatureParams(0, 0, 0, 1), 3, rng) == FeatureAllocation(3)

    def test_split_probability(self, rng):
        draws = 200_000
        z = two_feature_memberships(TwoFeatureParams(0.1, 0.2, 0.3, 0.4), 2, rng, draws)
        counts = tally_codes(mask_counts(z), 2)
        target = FeatureAllocation(2, ((1,), (2,)))
        assert abs(binomial_z(counts[target], draws, 0.04)) < 3

    def test_exchangeable_n3(self, rng):
        z = two_feature_memberships(EX5, 3, rng, 1_000_000)
        assert orbit_uniformity_pvalue(tally_codes(mask_counts(z), 3), 3) > 1e-3


class TestEfpfModel:
    def test_zero_rate_is_frequency_model(self):
        m = FrequencyModel((0.4, 0.7))
        a = efpf_model_sample(EfpfModel(m, 0.0), 5, np.random.default_rng(11))
        b = frequency_model_sample(m, 5, np.random.default_rng(11))
        assert a == b

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            EfpfModel(FrequencyModel(), -0.1)

    def test_singletons_only(self, rng):
        draws, n, lam = 30_000, 4, 0.35
        ks = Counter(efpf_model_sample(EfpfModel(FrequencyModel(), lam), n, rng).k for _ in range(draws))
        probs = {k: stats.poisson.pmf(k, n * lam) for k in range(15)}
        assert gof_pvalue(ks, probs, draws) > 1e-3

    def test_pooled_variant_agrees(self, rng):
        model = EfpfModel(FrequencyModel((0.5,)), 0.3)
        draws = 40_000
        a = Counter(efpf_model_sample(model, 3, rng) for _ in range(draws))
        b = Counter(efpf_model_sample_pooled(model, 3, rng) for _ in range(draws))
        assert chi_square_homogeneity(a, b) > 1e-3

    def test_batch_counts_agree_with_scalar(self, rng):
        model = EfpfModel(FrequencyModel((0.5, 0.2)), 0.4)
        draws = 100_000
        z, c = efpf_model_singleton_counts(model, 2, rng, draws)
        batch = tally_codes(mask_counts(z, c), 2)
        scalar = Counter(efpf_model_sample(model, 2, rng) for _ in range(draws))
        assert chi_square_homogeneity(batch, scalar) > 1e-3

    def test_exchangeable_n3(self, rng):
        model = EfpfModel(FrequencyModel((0.6, 0.3)), 0.25)
        z, c = efpf_model_singleton_counts(model, 3, rng, 1_000_000)
        assert orbit_uniformity_pvalue(tally_codes(mask_counts(z, c), 3), 3) > 1e-3

    def test_joint_sampler(self, rng):
        def joint(r):
            v = r.random()
            return FrequencyModel((v,)), 2 * v

        model = EfpfModel(joint=joint)
        fa = efpf_model_sample(model, 3, rng)
        assert fa.n == 3
        with pytest.raises(ValueError):
            efpf_model_singleton_counts(model, 3, rng, 10)
