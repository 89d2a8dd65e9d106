"""Distributional policy evaluation at the CDF level under the Cramer metric.

The library evaluates a fixed policy on a finite MDP by iterating the
distributional Bellman update on exact atomic return laws, certifies the
sqrt(gamma) contraction and its component bounds numerically, and realises
the same dynamics in a family of regularised spectral Hilbert geometries
that recover the Cramer metric in the zero-regularisation limit.
"""

__version__ = "0.1.0"

from .distributions import (
    AtomicDistribution,
    CentredCdf,
    GridCdf,
    cdf_eval,
    centre,
    cramer_distance,
    cramer_distance_energy_form,
    from_samples,
    grid_to_atomic,
    make_atomic,
    merge_atoms,
    point_mass,
    to_grid,
    two_point,
)
from .mdp import (
    FiniteMdp,
    Policy,
    ReturnField,
    classical_q_values,
    monte_carlo_returns,
    policy_kernel,
    reward_marginal,
)
from .bellman import (
    BellmanConfig,
    EvaluationResult,
    GridSpec,
    apply_conditional_expectation,
    apply_discount_scale,
    apply_reward_translation,
    bellman_apply,
    bellman_pointwise_cdf,
    evaluate_policy,
    field_distance,
)
from .spectral import (
    EpsGeometry,
    QuadratureSpec,
    SignedExpSum,
    SpectralField,
    char_fn_eval,
    cdf_diff_fourier,
    cramer_via_spectrum,
    eps_sweep,
    h_eps_inner,
    induced_field_distance,
    lift_V,
    lift_V_inv,
    reg_distance,
    spectral_bellman_apply,
    spectral_embed,
    transport_U,
    transport_U_inv,
    transport_V,
)
from .verify import CheckReport, run_default_suite

__all__ = [
    "AtomicDistribution", "CentredCdf", "GridCdf", "cdf_eval", "centre",
    "cramer_distance", "cramer_distance_energy_form", "from_samples",
    "grid_to_atomic", "make_atomic", "merge_atoms", "point_mass", "to_grid",
    "two_point",
    "FiniteMdp", "Policy", "ReturnField", "classical_q_values",
    "monte_carlo_returns", "policy_kernel", "reward_marginal",
    "BellmanConfig", "EvaluationResult", "GridSpec",
    "apply_conditional_expectation", "apply_discount_scale",
    "apply_reward_translation", "bellman_apply", "bellman_pointwise_cdf",
    "evaluate_policy", "field_distance",
    "EpsGeometry", "QuadratureSpec", "SignedExpSum", "SpectralField",
    "char_fn_eval", "cdf_diff_fourier", "cramer_via_spectrum", "eps_sweep",
    "h_eps_inner", "induced_field_distance", "lift_V", "lift_V_inv",
    "reg_distance", "spectral_bellman_apply", "spectral_embed",
    "transport_U", "transport_U_inv", "transport_V",
    "CheckReport", "run_default_suite",
]
