"""Coalitional free-energy toolkit.

Harsanyi dividends and Shapley influence on the subset lattice, Gibbs
posteriors over coalitions, epsilon-Nash certificates for the induced game,
mean-field participation marginals, and precision sweeps of the symmetric
Gaussian coalition models.
"""

__version__ = "0.1.0"

from .lattice import (
    CoalitionMask,
    DividendTable,
    ShapleyVector,
    Synergy,
    ValueTable,
    classify_synergy,
    energy_dividends,
    harsanyi_dividends,
    mask_of,
    members_of,
    reconstruct_values,
    shapley_from_dividends,
    shapley_monte_carlo,
    shapley_values,
    truncate_dividends,
)
from .gibbs import (
    CoalitionDistribution,
    EnergyTable,
    GibbsPosterior,
    collective_free_energy,
    energy_from_game,
    gibbs_posterior,
    participation_marginals,
    verify_gibbs_optimality,
)
from .game import (
    NashCertificate,
    agent_cost,
    best_response,
    epsilon_decay_scan,
    nash_certificate,
    profile_distribution,
)
from .meanfield import (
    MeanFieldSolution,
    PairwiseEnergy,
    attention_weights,
    compare_exact_meanfield,
    meanfield_fixed_point,
    meanfield_free_energy,
    random_pairwise,
)
from .models import (
    PRESETS,
    DomainPreset,
    GaussianCoalitionModel,
    InfluenceSample,
    analytic_peak,
    coalition_value,
    sample_influence,
    shapley_curve,
    symmetric_shapley,
)
from .sweep import (
    SweepResult,
    aggregate,
    curvature_significance,
    find_beta_star,
    normalize_overlay,
    quadratic_fit,
    run_sweep,
)
