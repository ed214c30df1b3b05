"""Decorrelating sample reweighting for stable linear prediction.

The package learns sample weights under which the columns of a design
matrix become close to independent, then fits weighted linear or logistic
models and measures how steady their errors stay across shifted test
environments.

Typical use::

    from srdo import SRDOReweighter, WeightedLeastSquares

    w = SRDOReweighter(random_state=0).fit_weights(X)
    model = WeightedLeastSquares().fit(X, y, sample_weight=w)
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Coefficients,
    CorrelationDiagnostics,
    LabeledDataset,
    SampleWeights,
    Standardizer,
    standardize,
    weighted_correlation,
)
from .decorrelate import (  # noqa: E402
    SRDOReweighter,
    SrdoConfig,
    StableRegressor,
    classification_weights,
    srdo,
)
from .estimators import (  # noqa: E402
    EstimatorConfig,
    PenalizedLinearRegression,
    WeightedLeastSquares,
    WeightedLogisticRegression,
    cross_validate,
    fit_config,
)
from .evaluation import auc, beta_error, evaluate_suite, repetition_harness, rmse  # noqa: E402
from .simgen import CovarianceSpec, SimulationConfig, generate_environment_suite  # noqa: E402

__all__ = [
    "Coefficients",
    "CorrelationDiagnostics",
    "CovarianceSpec",
    "EstimatorConfig",
    "LabeledDataset",
    "PenalizedLinearRegression",
    "SRDOReweighter",
    "SampleWeights",
    "SimulationConfig",
    "SrdoConfig",
    "StableRegressor",
    "Standardizer",
    "WeightedLeastSquares",
    "WeightedLogisticRegression",
    "auc",
    "beta_error",
    "classification_weights",
    "cross_validate",
    "evaluate_suite",
    "fit_config",
    "generate_environment_suite",
    "repetition_harness",
    "rmse",
    "srdo",
    "standardize",
    "weighted_correlation",
]
