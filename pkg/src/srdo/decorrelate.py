"""Sample reweighting that decorrelates a design matrix.

The pipeline:

1. :func:`column_shuffle` builds a pseudo-dataset whose columns are drawn
   independently (with replacement) from the columns of ``X``, which
   follows the product of the empirical marginals.
2. :func:`fit_density_ratio` trains a probabilistic classifier to tell the
   pseudo rows (label 1) from the original rows (label 0).
3. :func:`estimate_weights` turns the classifier's odds into density-ratio
   weights ``p(Z=1|x) / p(Z=0|x)``, clips them and rescales to unit mean.

Under the resulting weights the weighted covariance of ``X`` is pulled
toward that of independent columns, which raises its smallest eigenvalue.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import (
    Coefficients,
    CorrelationDiagnostics,
    SampleWeights,
    check_design,
    make_rng,
    standardize,
    weighted_correlation,
)
from .estimators import _sigmoid, newton_logistic
from .exceptions import (
    AllSamplesDropped,
    AllWeightsClipped,
    ConvergenceWarning,
    DimensionMismatch,
    NoImprovementWarning,
    SRDOError,
)


@dataclass(frozen=True)
class SrdoConfig:
    """Settings for the reweighting pipeline.

    ``quadratic`` adds all pairwise products ``x_j x_k`` (``j <= k``) to the
    ratio classifier's inputs. A purely linear logit cannot represent the
    ratio between a zero-mean correlated design and its independent-column
    counterpart (that log-ratio is a quadratic form), so it is on by default.
    """

    weight_clip: tuple[float, float] = (0.05, 20.0)
    classifier_regularization: float = 1e-4
    classifier_max_iterations: int = 500
    resample_replicas: int = 1
    quadratic: bool = True
    confidence_threshold: float = 0.05
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.weight_clip
        object.__setattr__(self, "weight_clip", (float(lo), float(hi)))
        if not 0 < lo < 1 < hi:
            raise SRDOError(f"weight_clip must satisfy 0 < lo < 1 < hi, got {self.weight_clip}")
        if self.classifier_regularization < 0:
            raise SRDOError("classifier_regularization must be nonnegative")
        if self.classifier_max_iterations < 1:
            raise SRDOError("classifier_max_iterations must be positive")
        if self.resample_replicas < 1:
            raise SRDOError("resample_replicas must be at least 1")
        if not 0 <= self.confidence_threshold < 0.5:
            raise SRDOError("confidence_threshold must lie in [0, 0.5)")

    def to_dict(self):
        return {
            "weight_clip": list(self.weight_clip),
            "classifier_regularization": self.classifier_regularization,
            "classifier_max_iterations": self.classifier_max_iterations,
            "resample_replicas": self.resample_replicas,
            "quadratic": self.quadratic,
            "confidence_threshold": self.confidence_threshold,
            "seed": self.seed,
        }


def quadratic_features(X):
    """``X`` followed by all products ``x_j * x_k`` with ``j <= k``."""
    X = np.asarray(X, dtype=float)
    j, k = np.triu_indices(X.shape[1])
    return np.hstack([X, X[:, j] * X[:, k]])


@dataclass(frozen=True)
class DensityRatioModel:
    """Logistic model of ``P(Z=1 | x)``; ``Z=1`` marks the resampled rows."""

    classifier_coefficients: Coefficients
    quadratic: bool
    n_neg: int
    n_pos: int
    training_meta: dict = field(default_factory=dict)

    @property
    def p(self):
        q = self.classifier_coefficients.p
        if not self.quadratic:
            return q
        # q = p + p(p+1)/2
        return int(round((-3 + np.sqrt(9 + 8 * q)) / 2))

    def features(self, X):
        X = check_design(X, min_rows=1)
        if X.shape[1] != self.p:
            raise DimensionMismatch(f"model trained on {self.p} columns, got {X.shape[1]}")
        return quadratic_features(X) if self.quadratic else X

    def log_odds(self, X):
        """``log P(Z=1|x) - log P(Z=0|x)``, the log of the uncorrected ratio."""
        return self.classifier_coefficients.predict(self.features(X))

    def predict_proba(self, X):
        return _sigmoid(self.log_odds(X))

    def log_ratio(self, X):
        """Log density ratio including the class-prior correction ``n_neg / n_pos``."""
        return self.log_odds(X) + np.log(self.n_neg / self.n_pos)


def column_shuffle(X, replicas=1, rng=0):
    """Draw ``replicas * n`` rows with each column sampled independently.

    Entry ``(i, j)`` of the output is a uniform draw with replacement from
    column ``j`` of ``X``, independently across cells.
    """
    X = check_design(X)
    n, p = X.shape
    rng = make_rng(rng)
    m = int(replicas) * n
    idx = rng.integers(0, n, size=(m, p))
    return X[idx, np.arange(p)]


def fit_density_ratio(X_neg, X_pos, config=None):
    """Train the ratio classifier: rows of ``X_pos`` labelled 1, ``X_neg`` 0.

    Minimizes mean log-loss plus ``(regularization / 2) ||slopes||^2`` with
    damped Newton to gradient norm 1e-8. If the iteration cap is hit the
    model is still returned, with ``training_meta["converged"] = False`` and
    a :class:`ConvergenceWarning`.
    """
    config = config or SrdoConfig()
    X_neg = check_design(X_neg, min_rows=1)
    X_pos = check_design(X_pos, min_rows=1)
    if X_neg.shape[1] != X_pos.shape[1]:
        raise DimensionMismatch(
            f"negative rows have {X_neg.shape[1]} columns, positive rows {X_pos.shape[1]}"
        )
    Z = np.vstack([X_neg, X_pos])
    F = quadratic_features(Z) if config.quadratic else Z
    A = np.column_stack([np.ones(F.shape[0]), F])
    y = np.concatenate([-np.ones(X_neg.shape[0]), np.ones(X_pos.shape[0])])
    theta, converged, it, loss, gnorm = newton_logistic(
        A, y, np.ones(A.shape[0]),
        l2=config.classifier_regularization,
        max_iterations=config.classifier_max_iterations,
        gradient_tol=1e-8,
    )
    if not converged:
        warnings.warn(
            f"ratio classifier stopped at gradient norm {gnorm:.3g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    meta = {"iterations": it, "final_loss": loss, "gradient_norm": gnorm,
            "converged": bool(converged), "seed": config.seed}
    return DensityRatioModel(
        Coefficients(theta[0], theta[1:]), config.quadratic,
        X_neg.shape[0], X_pos.shape[0], meta,
    )


def _clip_and_normalize(raw, config):
    lo, hi = config.weight_clip
    if np.all((raw < lo) | (raw > hi)):
        raise AllWeightsClipped(
            "every raw weight lies outside the clip bounds; the ratio classifier "
            "is probably overfitting"
        )
    w = np.clip(raw, lo, hi)
    return SampleWeights(w / w.mean(), config.weight_clip)


def estimate_weights(model, X, config=None):
    """Density-ratio weights for the rows of ``X``.

    ``w_i = P(Z=1|x_i) / P(Z=0|x_i) * n_neg / n_pos`` (the prior factor is 1
    when the classes are balanced), clipped to ``config.weight_clip`` and
    divided by the post-clip mean.
    """
    config = config or SrdoConfig()
    raw = np.exp(model.log_ratio(X))
    return _clip_and_normalize(raw, config)


@dataclass(frozen=True)
class SrdoResult:
    weights: SampleWeights
    before: CorrelationDiagnostics
    after: CorrelationDiagnostics
    model: DensityRatioModel
    no_improvement: bool = False

    @property
    def flags(self):
        return {
            "no_improvement": self.no_improvement,
            "classifier_converged": bool(self.model.training_meta.get("converged", True)),
        }

    def to_dict(self):
        return {
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
            "flags": self.flags,
            "classifier": dict(self.model.training_meta),
        }


def _check_improvement(X, weights, before):
    after = weighted_correlation(X, weights)
    if after.smallest_eigenvalue < before.smallest_eigenvalue:
        warnings.warn(
            "reweighting lowered the smallest correlation eigenvalue; "
            "returning uniform weights",
            NoImprovementWarning,
            stacklevel=3,
        )
        uniform = SampleWeights.uniform(X.shape[0])
        return uniform, weighted_correlation(X, uniform), True
    return weights, after, False


def srdo(X, config=None):
    """Learn decorrelating sample weights for ``X`` (expected standardized).

    Composes :func:`column_shuffle`, :func:`fit_density_ratio` and
    :func:`estimate_weights`, and reports correlation diagnostics without
    and with the weights. If the weights make the correlation matrix worse
    conditioned (smaller smallest eigenvalue) than no weights at all,
    uniform weights are returned with ``no_improvement=True``. The mean
    absolute off-diagonal correlation is not used for this check: on block
    designs it is dominated by the many near-zero cross-block pairs, which
    weighting noise inflates even while the within-block pairs shrink.
    """
    config = config or SrdoConfig()
    X = check_design(X)
    rng = make_rng(config.seed)
    X_tilde = column_shuffle(X, config.resample_replicas, rng)
    model = fit_density_ratio(X, X_tilde, config)
    weights = estimate_weights(model, X, config)
    before = weighted_correlation(X)
    weights, after, flag = _check_improvement(X, weights, before)
    return SrdoResult(weights, before, after, model, flag)


def classification_weights(X, approximate_model, config=None):
    """Reweighting for logistic regression around an approximate fit.

    With ``p_i = sigmoid(b0 + x_i @ beta)`` from ``approximate_model``, the
    target relation is ``p_i (1 - p_i) w_i = ratio_i``. Rows predicted with
    confidence (``min(p_i, 1 - p_i) < confidence_threshold``) are left out of
    the ratio classifier and get raw weight 1. For the others
    ``w_i = ratio_i * mean(d) / d_i`` with ``d_i = p_i (1 - p_i)`` averaged
    over kept rows; the constant ``mean(d)`` keeps the clip bounds on the
    same scale as in regression mode. Weights are then clipped and rescaled
    to unit mean.

    Returns an :class:`SrdoResult`.
    """
    config = config or SrdoConfig()
    X = check_design(X)
    p_tilde = _sigmoid(approximate_model.predict(X))
    keep = np.minimum(p_tilde, 1 - p_tilde) >= config.confidence_threshold
    if not np.any(keep):
        raise AllSamplesDropped(
            f"confidence_threshold={config.confidence_threshold} drops every row"
        )
    if keep.sum() < 2:
        raise AllSamplesDropped("fewer than two rows survive the confidence threshold")
    Xk = X[keep]
    rng = make_rng(config.seed)
    X_tilde = column_shuffle(Xk, config.resample_replicas, rng)
    model = fit_density_ratio(Xk, X_tilde, config)
    d = p_tilde[keep] * (1 - p_tilde[keep])
    raw = np.ones(X.shape[0])
    raw[keep] = np.exp(model.log_ratio(Xk)) * d.mean() / d
    weights = _clip_and_normalize(raw, config)
    before = weighted_correlation(X)
    weights, after, flag = _check_improvement(X, weights, before)
    return SrdoResult(weights, before, after, model, flag)


class SRDOReweighter(BaseEstimator):
    """Estimator wrapper: ``fit(X)`` learns decorrelating sample weights.

    ``X`` is standardized internally (population std) before the ratio
    classifier is trained; the weights are invariant to that choice up to
    the effect of the ridge term.

    Parameters
    ----------
    weight_clip : tuple of float, default=(0.05, 20.0)
    regularization : float, default=1e-4
    max_iter : int, default=500
    replicas : int, default=1
        Resampled rows per original row.
    quadratic : bool, default=True
        Add pairwise products to the ratio classifier inputs.
    random_state : int, default=0

    Attributes
    ----------
    weights_ : ndarray of shape (n_samples,)
        Unit-mean sample weights for the training rows.
    result_ : SrdoResult
        Weights, diagnostics before/after, the ratio model and flags.
    """

    def __init__(self, weight_clip=(0.05, 20.0), regularization=1e-4, max_iter=500,
                 replicas=1, quadratic=True, random_state=0):
        self.weight_clip = weight_clip
        self.regularization = regularization
        self.max_iter = max_iter
        self.replicas = replicas
        self.quadratic = quadratic
        self.random_state = random_state

    def _config(self):
        seed = self.random_state
        if isinstance(seed, np.random.Generator):
            seed = int(seed.integers(0, 2**63 - 1))
        return SrdoConfig(tuple(self.weight_clip), self.regularization, self.max_iter,
                          self.replicas, self.quadratic, seed=int(seed))

    def fit(self, X, y=None):
        Xs, self.standardization_ = standardize(X)
        self.result_ = srdo(Xs, self._config())
        self.weights_ = np.array(self.result_.weights.values)
        self.n_features_in_ = Xs.shape[1]
        return self

    def fit_weights(self, X, y=None):
        return self.fit(X, y).weights_

    @property
    def diagnostics_(self):
        check_is_fitted(self, "result_")
        return self.result_.before, self.result_.after


class StableRegressor(BaseEstimator):
    """Fit ``estimator`` with sample weights learned by ``reweighter``.

    Any estimator whose ``fit`` accepts ``sample_weight`` works, including
    scikit-learn's linear models.
    """

    def __init__(self, estimator=None, reweighter=None):
        self.estimator = estimator
        self.reweighter = reweighter

    def fit(self, X, y):
        from sklearn.base import clone

        from .estimators import WeightedLeastSquares

        est = WeightedLeastSquares() if self.estimator is None else clone(self.estimator)
        rw = SRDOReweighter() if self.reweighter is None else clone(self.reweighter)
        self.reweighter_ = rw.fit(X)
        self.estimator_ = est.fit(X, y, sample_weight=rw.weights_)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimator_")
        return self.estimator_.predict(X)

    def score(self, X, y, sample_weight=None):
        return self.estimator_.score(X, y, sample_weight=sample_weight)


__all__ = [
    "DensityRatioModel",
    "SRDOReweighter",
    "SrdoConfig",
    "SrdoResult",
    "StableRegressor",
    "classification_weights",
    "column_shuffle",
    "estimate_weights",
    "fit_density_ratio",
    "quadratic_features",
    "srdo",
]
