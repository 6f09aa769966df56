"""Integrated-volatility estimation from one-sided boundary observations."""

__version__ = "0.1.0"

from .airy import (
    ZetaParams,
    airy_ai,
    airy_ai_prime,
    airy_integral_AI,
    scorer_gi,
    scorer_gi_prime,
    zeta,
)
from .errors import (
    BoundaryVolError,
    CalibrationError,
    ConfigError,
    DataError,
    DomainError,
    NumericError,
)
from .estimator import EstimatorConfig, IVEstimate, adaptive_threshold, estimate_iv, estimate_iv_parametric
from .excursion import (
    LambdaResult,
    MCConfig,
    MCEstimate,
    lambda_functionals,
    mc_double_laplace,
    mc_exp_area,
    mc_exp_area_t,
    mc_I,
    survival_R,
)
from .grids import Grids, resolve_grids
from .observations import (
    BinMinima,
    NoiseSpec,
    PPPObservations,
    RegressionObservations,
    extract_bin_minima,
    sample_bin_minima_direct,
    sample_ppp,
    sample_regression,
)
from .paths import (
    JumpSpec,
    PathConfig,
    PiecewiseConstant,
    SamplePath,
    VolModel,
    first_passage_prob,
    inject_jumps,
    inject_sigma_jump,
    simulate_brownian,
    simulate_ito,
)
from .psi import PsiTable, b_constants, calibrate_psi_ppp, calibrate_psi_regression, invert_psi, psi_slope
from .quotes import QuoteSchema, QuoteSeries, ingest_quotes_csv
from .studies import (
    JumpScenario,
    RunReport,
    SimulationSetup,
    estimate_day,
    rate_study,
    robustness_study,
)

__all__ = [
    "adaptive_threshold",
    "airy_ai",
    "airy_ai_prime",
    "airy_integral_AI",
    "b_constants",
    "BinMinima",
    "BoundaryVolError",
    "calibrate_psi_ppp",
    "calibrate_psi_regression",
    "CalibrationError",
    "ConfigError",
    "DataError",
    "DomainError",
    "estimate_day",
    "estimate_iv",
    "estimate_iv_parametric",
    "EstimatorConfig",
    "extract_bin_minima",
    "first_passage_prob",
    "Grids",
    "ingest_quotes_csv",
    "inject_jumps",
    "inject_sigma_jump",
    "invert_psi",
    "IVEstimate",
    "JumpScenario",
    "JumpSpec",
    "lambda_functionals",
    "LambdaResult",
    "mc_double_laplace",
    "mc_exp_area",
    "mc_exp_area_t",
    "mc_I",
    "MCConfig",
    "MCEstimate",
    "NoiseSpec",
    "NumericError",
    "PathConfig",
    "PiecewiseConstant",
    "PPPObservations",
    "psi_slope",
    "PsiTable",
    "QuoteSchema",
    "QuoteSeries",
    "rate_study",
    "RegressionObservations",
    "resolve_grids",
    "robustness_study",
    "RunReport",
    "sample_bin_minima_direct",
    "sample_ppp",
    "sample_regression",
    "SamplePath",
    "scorer_gi",
    "scorer_gi_prime",
    "simulate_brownian",
    "simulate_ito",
    "SimulationSetup",
    "survival_R",
    "VolModel",
    "zeta",
    "ZetaParams",
]
