"""Exact convergence-rate analysis for independence samplers.

Computes the exact geometric rate 1 - 1/w* of an independent-proposal
Metropolis-Hastings chain from the weight function w = target/proposal, the
full closed-form spectrum and exact TV curves in the finite case, the n-step
kernel and pointwise TV by quadrature in the continuous case, and validates
all of it with samplers, a split-chain coupling, and brute-force oracles.
"""

from .discrete import (
    DiscretePointRates,
    DiscreteRateBounds,
    MatrixChain,
    SpectralDecomposition,
    TransitionMatrix,
    TvTrajectory,
    build_kernel,
    exact_tv,
    liu_spectrum,
    per_point_rate_discrete,
    rank_one_eigen,
    rate_bounds_discrete,
)
from .errors import ImhrateError, ModelError, NumericalError
from .general import (
    GeneralPointRate,
    RateReport,
    WeightCdfPair,
    lambda_fn,
    n_step_kernel,
    per_point_rate_general,
    rate_report,
    rejection_probability,
    t_n,
    tv_at_point_general,
    weight_cdf_pair,
)
from .measures import (
    DiscreteModel,
    GeneralModel,
    StructureHints,
    SupportDescriptor,
    WeightSummary,
    compute_wstar,
    weight_at,
    wstar_discrete,
)
from .modelspec import LoadedModel, load_model
from .quadrature import QuadratureConfig
from .registry import REGISTRY, build_model
from .report_io import __version__
from .samplers import (
    ChainRun,
    CouplingRun,
    ProposalKernel,
    TvEstimate,
    empirical_tv,
    run_coupling,
    run_imh,
    run_mh,
)

__all__ = [
    "__version__",
    "ImhrateError",
    "ModelError",
    "NumericalError",
    "DiscreteModel",
    "GeneralModel",
    "StructureHints",
    "SupportDescriptor",
    "WeightSummary",
    "weight_at",
    "compute_wstar",
    "wstar_discrete",
    "TransitionMatrix",
    "MatrixChain",
    "SpectralDecomposition",
    "TvTrajectory",
    "DiscreteRateBounds",
    "DiscretePointRates",
    "build_kernel",
    "liu_spectrum",
    "rank_one_eigen",
    "exact_tv",
    "rate_bounds_discrete",
    "per_point_rate_discrete",
    "WeightCdfPair",
    "RateReport",
    "GeneralPointRate",
    "weight_cdf_pair",
    "lambda_fn",
    "rejection_probability",
    "t_n",
    "n_step_kernel",
    "tv_at_point_general",
    "rate_report",
    "per_point_rate_general",
    "ChainRun",
    "CouplingRun",
    "ProposalKernel",
    "TvEstimate",
    "run_mh",
    "run_imh",
    "run_coupling",
    "empirical_tv",
    "QuadratureConfig",
    "REGISTRY",
    "build_model",
    "LoadedModel",
    "load_model",
]
