"""Fair optimal taxes for weighted congestion games with polynomial latencies."""

from .equilibrium import (
    EquilibriumProfile,
    RatioReport,
    brute_force_opt,
    certify_ratio,
    extract_best_pure,
    hedge_dynamics,
)
from .game import (
    PolyLatency,
    WeightedGame,
    load_of,
    player_cost,
    rescale_weights,
    social_cost,
    unweighted_to_weighted,
)
from .lp import (
    RelaxationSolution,
    admissible_subsets,
    check_feasibility,
    knapsack_pricing,
    rho_times_lp_bound,
    solve_relaxation,
)
from .lowerbound import (
    make_symmetric_instance,
    symmetric_mixed_cost,
    uniform_is_minimizer_check,
    uniform_ratio_curve,
)
from .poisson import (
    bell_numbers,
    beta_vector,
    convex_order_check,
    p_r,
    poisson_mixture_moments,
    rho_factor,
    rho_ratio_at,
)
from .taxes import (
    TaxedLatency,
    alpha_coeffs,
    alpha_tilde_coeffs,
    build_taxed_latencies,
    full_recursion_residual,
    recursion_residual,
)

__version__ = "0.1.0"
