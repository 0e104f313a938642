"""Operational guarantees implied by a variational-distance level on a shared key."""

from .bounds import (
    GuaranteeReport,
    ParameterError,
    SecurityParameters,
    ber_gap_bound,
    build_report,
    convergence_exponent,
    effective_uniform_bits,
    kpa_guess_bound,
    leak_ec,
    markov_individual_epsilon,
    raw_guess_bound,
)
from .dist import (
    DistributionError,
    KeyDistribution,
    KeySubset,
    SubsetOutcome,
    condition,
    conditional_guess_prob,
    distance_to_uniform,
    eve_bit_error_rate,
    is_uniform,
    marginal,
    optimal_guess_prob,
    uniform,
    variational_distance,
)
from .ensemble import (
    DistanceEnsemble,
    average_distance,
    exceedance_fraction,
    individual_guarantee_split,
)
from .extremal import (
    ExtremalRecipe,
    InfeasibleBudget,
    construct_biased_bits_distribution,
    construct_equality_distribution,
    max_guess_given_budget,
)

__version__ = "0.1.0"
