"""Best-experienced-payoff S(k) sampling dynamics."""
from ._backend import BACKEND
from .dynamics import (
    Jacobian,
    RestPoint,
    RestPointSearch,
    Trajectory,
    classify_convergence,
    find_rest_points,
    integrate,
    numeric_jacobian,
    perturbation_probe,
)
from .finite_pop import AgentPopulation, compare_to_mean_dynamic, simulate_agents
from .game import (
    AsymmetricGame,
    GameSchemaError,
    SymmetricGame,
    make_asymmetric_game,
    make_asymmetric_hawk_dove,
    make_asymmetric_pd,
    make_coordination,
    make_matrix_game,
    make_prisoners_dilemma,
    make_public_goods,
    make_symmetric_game,
)
from .genericity import GenericityReport, check_effective_genericity
from .kernel import (
    MultiPopulationState,
    PayoffDistribution,
    PopulationState,
    ResourceCapError,
    SamplingKernel,
    TieRule,
    asymmetric_best_experienced,
    best_experienced_probabilities,
    brute_force_w,
    k_trial_total_distribution,
    trial_payoff_distribution,
)
from .pd import (
    HCurve,
    PdBoundaryError,
    PdRegion,
    binom_pmf,
    classify_region,
    h,
    pd_sample_comparison,
    solve_p_star,
    tie_prob,
    tie_prob_cf,
    win_prob,
)
from .stability import (
    NotStrictEquilibriumError,
    StabilityVerdict,
    SupportMatrix,
    SupportRelation,
    asymmetric_support_relation,
    condition_check,
    k_threshold,
    spectral_radius,
    spectral_radius_cross_check,
    stability_verdict,
    support_matrix,
    support_relation,
)

__version__ = "0.1.0"
