"""Randomised-mixture pricing models.

Simulation of Levy-type drivers with a hidden mixing variable, nonlinear
filtering from noisy information processes, filtered Esscher martingales,
positive-rate bond pricing in the Flesaker-Hughston form, weighted
heat-kernel models on OU state variables, and Monte Carlo bond options.
"""

from .config import OutputSettings, RunSettings, ScenarioConfig, load_config, parse_config
from .errors import (
    AdmissibilityError,
    ConfigError,
    CurveError,
    DomainError,
    HorizonError,
    RandmixError,
)
from .esscher import (
    MarketState,
    MartingaleSpec,
    filtered_dynamics_coefficients,
    filtered_m_matrix,
    filtered_m_tu,
    m_tu,
)
from .filtering import (
    BrownianGeneralInfo,
    BrownianLinearInfo,
    FilterDensity,
    GammaNoiseInfo,
    initial_filter,
    posterior_brownian_general,
    posterior_brownian_linear,
    posterior_gamma_info,
    simulate_information,
)
from .heatkernel import (
    FhEquivalenceReport,
    GeneralWeight,
    HeatKernelBatch,
    HeatKernelModel,
    HeatKernelState,
    SeparableExp,
    bond_price_whk,
    bond_price_whk_batch,
    fh_equivalence,
    ou_quadratic_propagator,
    pricing_kernel_whk,
    pricing_kernel_whk_batch,
    sample_heat_kernel_states,
    short_rate_whk,
    short_rate_whk_batch,
    simulate_heat_kernel_paths,
    yield_curve_whk,
)
from .mixers import (
    AdmissibilityReport,
    BinaryExpDecay,
    Chameleon,
    DiscretePrior,
    ExpDecay,
    GaussBump,
    OUQuadratic,
    UniformPrior,
    evaluate_mixer,
    prior_nodes,
    validate_admissibility,
)
from .options import OptionQuote, OptionSpec, OptionSurface, mc_bond_call, option_surface
from .pricing import (
    CurvePoint,
    FlatCurve,
    PricingModel,
    TabulatedCurve,
    VolStructure,
    bond_price,
    bond_price_batch,
    bond_volatility_structure,
    filtered_payoff_at,
    forward_rate,
    pricing_kernel,
    pricing_kernel_batch,
    short_rate,
    short_rate_batch,
    yield_curve,
    yield_curve_batch,
)
from .processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    OUParams,
    SamplePath,
    TimeGrid,
    VGParams,
    esscher_normalizer,
    log_mgf_rate,
    ou_conditional_moments,
    simulate_brownian,
    simulate_compound_poisson,
    simulate_gamma,
    simulate_ou,
    simulate_vg,
)
from .quadrature import QuadratureConfig, build_rule, integrate_semi_infinite, refine
from .rng import RngStream
from .simulation import (
    JointPaths,
    StateBatch,
    evolve,
    replicate_state,
    sample_states,
    simulate_joint_paths,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RandmixError",
    "DomainError",
    "AdmissibilityError",
    "CurveError",
    "HorizonError",
    "ConfigError",
    # randomness
    "RngStream",
    # processes
    "TimeGrid",
    "SamplePath",
    "BrownianParams",
    "GammaParams",
    "CompoundPoissonParams",
    "VGParams",
    "GammaCPParams",
    "OUParams",
    "simulate_brownian",
    "simulate_gamma",
    "simulate_compound_poisson",
    "simulate_vg",
    "simulate_ou",
    "ou_conditional_moments",
    "log_mgf_rate",
    "esscher_normalizer",
    # mixers and priors
    "ExpDecay",
    "BinaryExpDecay",
    "GaussBump",
    "Chameleon",
    "OUQuadratic",
    "evaluate_mixer",
    "DiscretePrior",
    "UniformPrior",
    "prior_nodes",
    "AdmissibilityReport",
    "validate_admissibility",
    # filtering
    "BrownianLinearInfo",
    "BrownianGeneralInfo",
    "GammaNoiseInfo",
    "FilterDensity",
    "initial_filter",
    "posterior_brownian_linear",
    "posterior_brownian_general",
    "posterior_gamma_info",
    "simulate_information",
    # filtered Esscher martingales
    "MartingaleSpec",
    "MarketState",
    "m_tu",
    "filtered_m_tu",
    "filtered_m_matrix",
    "filtered_dynamics_coefficients",
    # state simulation
    "StateBatch",
    "JointPaths",
    "sample_states",
    "simulate_joint_paths",
    "evolve",
    "replicate_state",
    # quadrature
    "QuadratureConfig",
    "build_rule",
    "integrate_semi_infinite",
    "refine",
    # bond pricing
    "FlatCurve",
    "TabulatedCurve",
    "CurvePoint",
    "VolStructure",
    "PricingModel",
    "pricing_kernel",
    "pricing_kernel_batch",
    "bond_price",
    "bond_price_batch",
    "short_rate",
    "short_rate_batch",
    "forward_rate",
    "yield_curve",
    "yield_curve_batch",
    "bond_volatility_structure",
    "filtered_payoff_at",
    # weighted heat-kernel models
    "SeparableExp",
    "GeneralWeight",
    "HeatKernelModel",
    "HeatKernelState",
    "HeatKernelBatch",
    "pricing_kernel_whk",
    "pricing_kernel_whk_batch",
    "bond_price_whk",
    "bond_price_whk_batch",
    "short_rate_whk",
    "short_rate_whk_batch",
    "yield_curve_whk",
    "sample_heat_kernel_states",
    "simulate_heat_kernel_paths",
    "ou_quadratic_propagator",
    "fh_equivalence",
    "FhEquivalenceReport",
    # options
    "OptionSpec",
    "OptionQuote",
    "OptionSurface",
    "mc_bond_call",
    "option_surface",
    # scenario configs
    "ScenarioConfig",
    "RunSettings",
    "OutputSettings",
    "load_config",
    "parse_config",
]
