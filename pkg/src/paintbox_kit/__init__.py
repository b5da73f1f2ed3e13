"""Exchangeable feature allocations: exact probabilities, samplers, paintboxes,
extended Poisson-binomial laws, and an enumeration oracle."""

from .allocation import (
    FeatureAllocation,
    LabelSets,
    MultiplicityProfile,
    OrderedFeatureAllocation,
    apply_permutation,
    is_extension,
    multiplicity_profile,
    order_of_appearance_labels,
    ordering_factor,
    restrict,
    to_binary_matrix,
    uniform_random_ordering,
)
from .paintbox import (
    FeaturePaintbox,
    IntervalSet,
    KingmanPaintbox,
    build_frequency_paintbox,
    intersection_length,
    kingman_sample,
    paintbox_sample,
    two_feature_paintbox,
)
from .poisson_binomial import (
    NotConvergedError,
    SpikeMeasure,
    TriangularArray,
    epb_log_pgf,
    epb_pmf,
    epb_sample,
    seq_bin_limit,
    seq_bin_limit_law,
    spike_moments,
)
from .probability import (
    EfpfValue,
    IbpParams,
    TwoFeatureParams,
    bernoulli_two_feature_efpf,
    finite_frequency_efpf,
    ibp_efpf,
    ibp_unordered_prob,
    is_frequency_factorizable,
    two_feature_ordered_prob,
)
from .samplers import (
    EfpfModel,
    FrequencyModel,
    SeqState,
    efpf_model_sample,
    frequency_model_sample,
    ibp_sample_allocation,
    ibp_sample_next,
    sample_3bp_frequencies,
    two_feature_sample,
)

__version__ = "0.1.0"
SCHEMA = "paintbox-kit/1"
