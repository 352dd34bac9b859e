"""rml: ratio-of-sums estimators, moment bounds, and Monte Carlo rate checks."""

__version__ = "0.1.0"

from .errors import (AllExcluded, ConfigError, DegenerateDenominator,
                     DegenerateFit, EmptySample, InvalidParams, InvalidSpec,
                     QuadratureFailure, RmlError, StateSpaceTooLarge,
                     TooManyExclusions, UnsupportedCombination,
                     UnsupportedKernel)
from .kernels import Kernel, eval_scaled, make_kernel, verify_order
from .params import (BoundInputs, DependenceSpec, HypothesisReport,
                     MomentParams, bandwidth_pointwise, bandwidth_uniform,
                     check_dependence, lemma1_bound, regression_feasible,
                     theoretical_exponent, thm1_exponents, validate_params)
from .ratio import (Lemma2Audit, RatioStats, deviation, lemma2_audit,
                    pisier_check, ratio_estimate)

__all__ = [
    "__version__",
    "AllExcluded", "ConfigError", "DegenerateDenominator", "DegenerateFit",
    "EmptySample", "InvalidParams", "InvalidSpec", "QuadratureFailure",
    "RmlError", "StateSpaceTooLarge", "TooManyExclusions",
    "UnsupportedCombination", "UnsupportedKernel",
    "Kernel", "eval_scaled", "make_kernel", "verify_order",
    "BoundInputs", "DependenceSpec", "HypothesisReport", "MomentParams",
    "bandwidth_pointwise", "bandwidth_uniform", "check_dependence",
    "lemma1_bound", "regression_feasible", "theoretical_exponent",
    "thm1_exponents", "validate_params",
    "Lemma2Audit", "RatioStats", "deviation", "lemma2_audit", "pisier_check",
    "ratio_estimate",
]
