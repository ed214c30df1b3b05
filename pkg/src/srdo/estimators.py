"""Weighted and penalized linear models.

Every squared-error objective here is scaled by ``1/n``::

    (1/n) * sum_i w_i (y_i - b0 - x_i @ beta)^2 + penalty(beta)

with unit-mean weights ``w``, so penalty strengths are comparable across
sample sizes. Penalties never touch the intercept. The penalties are

- ``lasso``: ``l1 * ||beta||_1``
- ``elastic_net``: ``l1 * ||beta||_1 + (l2 / 2) * ||beta||_2^2``
- ``ulasso``: ``l1 * ||beta||_1 + l2 * beta^T C beta``
- ``iilasso``: ``l1 * ||beta||_1 + l2 * |beta|^T R |beta|``

where ``C`` and ``R`` come from :func:`build_penalty_matrix`.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import (
    Coefficients,
    check_design,
    check_response,
    check_weights,
    make_rng,
    normalize_weights,
)
from .exceptions import (
    ConvergenceWarning,
    DimensionMismatch,
    IndefinitePenalty,
    OneClassOnly,
    SingularGram,
    SRDOError,
)

METHODS = ("ols", "lasso", "elastic_net", "ulasso", "iilasso", "logistic")
REGRESSION_METHODS = METHODS[:5]
R_CAP = 1e6
R_CAP_CORRELATION = 1.0 - 1e-6
GRAM_EIGEN_TOL = 1e-10
OBJECTIVE_CONVENTION = "(1/n)*sum_i w_i*(y_i - b0 - x_i.beta)^2 + penalty; intercept unpenalized"


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "ols"
    lambda1: float = 0.0
    lambda2: float = 0.0
    fit_intercept: bool = True
    max_iterations: int = 10_000
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.method not in METHODS:
            raise SRDOError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise SRDOError("penalty strengths must be nonnegative")
        if not self.tolerance > 0:
            raise SRDOError("tolerance must be positive")

    def to_dict(self):
        return {
            "method": self.method,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "fit_intercept": self.fit_intercept,
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class FitResult:
    """Coefficients plus solver bookkeeping."""

    coefficients: Coefficients
    converged: bool = True
    n_iter: int = 0
    objective: float = float("nan")
    history: list = field(default_factory=list, compare=False, repr=False)

    @property
    def intercept(self):
        return self.coefficients.intercept

    @property
    def slopes(self):
        return self.coefficients.slopes


def _prepare(X, y, w):
    X = check_design(X, min_rows=1)
    y = check_response(y, X.shape[0])
    w = check_weights(w, X.shape[0])
    return X, y, w


def _weighted_center(X, y, w, fit_intercept):
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    total = w.sum()
    xm = w @ X / total
    ym = w @ y / total
    return X - xm, y - ym, xm, ym


# --------------------------------------------------------------------------
# weighted least squares

def fit_wls(X, y, w=None, config=None):
    """Exact weighted least squares via the weighted normal equations.

    Minimizes ``sum_i w_i (x_i @ beta + b0 - y_i)^2``. Raises
    :class:`SingularGram` when the weighted Gram matrix (centered, when an
    intercept is fitted) has smallest eigenvalue at or below 1e-10.
    """
    config = config or EstimatorConfig()
    X, y, w = _prepare(X, y, w)
    n = X.shape[0]
    Xc, yc, xm, ym = _weighted_center(X, y, w, config.fit_intercept)
    G = (Xc * w[:, None]).T @ Xc / n
    G = 0.5 * (G + G.T)
    if np.linalg.eigvalsh(G)[0] <= GRAM_EIGEN_TOL:
        raise SingularGram(
            "weighted Gram matrix is singular; reweighting cannot fix exact "
            "rank deficiency, drop the dependent columns"
        )
    c = Xc.T @ (w * yc) / n
    beta = np.linalg.solve(G, c)
    intercept = ym - xm @ beta if config.fit_intercept else 0.0
    resid = y - intercept - X @ beta
    return FitResult(Coefficients(intercept, beta), True, 1, float(np.mean(w * resid**2)))


# --------------------------------------------------------------------------
# penalized coordinate descent

@dataclass(frozen=True)
class PenaltyMatrix:
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("ulasso_C", "iilasso_R"):
            raise SRDOError(f"unknown penalty kind {self.kind!r}")
        V = np.asarray(self.values, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or not np.allclose(V, V.T):
            raise SRDOError("penalty matrix must be square and symmetric")
        if np.any(np.diag(V) != 0):
            raise SRDOError("penalty matrix must have a zero diagonal")
        object.__setattr__(self, "values", V)


def build_penalty_matrix(X, kind):
    """Correlation penalty matrix for ULasso (``C``) or IILasso (``R``).

    With ``r_jk = |X_j . X_k| / n`` (an absolute correlation for standardized
    ``X``), ``C_jk = r_jk^2`` and ``R_jk = r_jk / (1 - r_jk)``. ``R`` is
    capped at 1e6 wherever ``r_jk > 1 - 1e-6``. Diagonals are zero.
    """
    X = check_design(X, min_rows=1)
    kind = {"ulasso": "ulasso_C", "iilasso": "iilasso_R"}.get(kind, kind)
    n = X.shape[0]
    r = np.clip(np.abs(X.T @ X) / n, 0.0, 1.0)
    if kind == "ulasso_C":
        M = r**2
    elif kind == "iilasso_R":
        with np.errstate(divide="ignore"):
            M = np.where(r > R_CAP_CORRELATION, R_CAP, r / (1.0 - r))
        M = np.minimum(M, R_CAP)
    else:
        raise SRDOError(f"unknown penalty kind {kind!r}")
    np.fill_diagonal(M, 0.0)
    return PenaltyMatrix(kind, 0.5 * (M + M.T))


def _soft_threshold(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


def penalized_objective(X, y, w, coefs, config, penalty=None):
    """Value of the coordinate-descent objective at ``coefs``."""
    X, y, w = _prepare(X, y, w)
    beta = np.asarray(coefs.slopes)
    resid = y - coefs.intercept - X @ beta
    obj = np.mean(w * resid**2) + config.lambda1 * np.abs(beta).sum()
    method = config.method
    if method == "elastic_net":
        obj += 0.5 * config.lambda2 * beta @ beta
    elif method == "ulasso":
        obj += config.lambda2 * beta @ penalty.values @ beta
    elif method == "iilasso":
        a = np.abs(beta)
        obj += config.lambda2 * a @ penalty.values @ a
    return float(obj)


def fit_coordinate_descent(X, y, w=None, config=None, penalty=None, *, record_history=False):
    """Cyclic coordinate descent for Lasso, Elastic Net, ULasso and IILasso.

    Each coordinate step solves its one-dimensional subproblem exactly::

        beta_j <- S(rho_j - l2 * (C beta)_{-j}, (l1 + 2 l2 (R|beta|)_{-j}) / 2)
                  / (a_j + l2 / 2 [elastic net only])

    where ``a_j = mean(w x_j^2)``, ``rho_j`` is the weighted inner product of
    column ``j`` with the partial residual, and ``S`` is soft-thresholding.
    The intercept is the weighted residual mean, applied by weighted
    centering. Sweeps stop once the largest coefficient change drops below
    ``config.tolerance``; hitting ``max_iterations`` returns the current
    iterate with ``converged=False`` and a :class:`ConvergenceWarning`.

    ``method="ols"`` runs the same loop with no penalty.
    """
    config = config or EstimatorConfig(method="lasso")
    if config.method not in REGRESSION_METHODS:
        raise SRDOError(f"coordinate descent does not handle {config.method!r}")
    X, y, w = _prepare(X, y, w)
    n, p = X.shape
    Xc, yc, xm, ym = _weighted_center(X, y, w, config.fit_intercept)
    G = (Xc * w[:, None]).T @ Xc / n
    c = Xc.T @ (w * yc) / n
    a = np.diag(G).copy()
    l1, l2 = config.lambda1, config.lambda2
    method = config.method

    if method in ("ulasso", "iilasso"):
        if penalty is None:
            penalty = build_penalty_matrix(X, method)
        P = penalty.values
        if P.shape != (p, p):
            raise DimensionMismatch("penalty matrix does not match number of columns")
    else:
        P = np.zeros((p, p))
    denom = a + (0.5 * l2 if method == "elastic_net" else 0.0)
    if np.any(denom <= 0):
        j = int(np.argmin(denom))
        raise SingularGram(f"column {j} has zero weighted variance")
    if method == "ulasso" and l2 > 0:
        # C has a zero diagonal and is indefinite, so G + l2 C can lose
        # positive definiteness; the objective is then unbounded below.
        curv = float(np.linalg.eigvalsh(0.5 * (G + G.T) + l2 * P)[0])
        if curv <= 0:
            raise IndefinitePenalty(
                f"loss plus lambda2 * beta^T C beta is not convex (smallest curvature "
                f"{curv:.3g}); lower lambda2"
            )

    beta = np.zeros(p)
    Gb = np.zeros(p)  # G @ beta, kept in sync
    history = []

    def smooth_obj():
        # (1/n) sum w (yc - Xc beta)^2 = yy - 2 c.beta + beta G beta
        return yy - 2 * c @ beta + beta @ Gb

    yy = float(np.mean(w * yc**2))

    def objective():
        obj = smooth_obj() + l1 * np.abs(beta).sum()
        if method == "elastic_net":
            obj += 0.5 * l2 * beta @ beta
        elif method == "ulasso":
            obj += l2 * beta @ P @ beta
        elif method == "iilasso":
            ab = np.abs(beta)
            obj += l2 * ab @ P @ ab
        return float(obj)

    if record_history:
        history.append(objective())
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        max_change = 0.0
        for j in range(p):
            old = beta[j]
            rho = c[j] - (Gb[j] - G[j, j] * old)
            thresh = 0.5 * l1
            if method == "ulasso":
                rho -= l2 * (P[j] @ beta - P[j, j] * old)
            elif method == "iilasso":
                thresh += l2 * (P[j] @ np.abs(beta) - P[j, j] * abs(old))
            new = _soft_threshold(rho, thresh) / denom[j]
            if new != old:
                Gb += G[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if record_history:
            history.append(objective())
        if max_change < config.tolerance:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"coordinate descent hit max_iterations={config.max_iterations}",
            ConvergenceWarning,
            stacklevel=2,
        )
    intercept = ym - xm @ beta if config.fit_intercept else 0.0
    return FitResult(Coefficients(intercept, beta), converged, it, objective(), history)


# --------------------------------------------------------------------------
# logistic regression

def _log1pexp(t):
    return np.logaddexp(0.0, t)


def _sigmoid(t):
    return np.exp(-_log1pexp(-t))


def _augment(X, fit_intercept):
    return np.column_stack([np.ones(X.shape[0]), X]) if fit_intercept else X


def logistic_objective(theta, A, y, w, l2, fit_intercept=True):
    """Mean weighted logistic loss plus ``(l2/2) ||slopes||^2``.

    ``theta`` stacks the intercept (when fitted) and the slopes; ``A`` is the
    design with a leading column of ones when an intercept is fitted, and
    ``y`` is coded as -1/+1. Returns ``(loss, gradient, hessian)``.
    """
    n = A.shape[0]
    eta = A @ theta
    margin = y * eta
    loss = np.sum(w * _log1pexp(-margin)) / n
    p = _sigmoid(eta)
    t01 = 0.5 * (y + 1)
    grad = A.T @ (w * (p - t01)) / n
    hess = (A * (w * p * (1 - p))[:, None]).T @ A / n
    pen = np.ones_like(theta)
    if fit_intercept:
        pen[0] = 0.0
    loss += 0.5 * l2 * np.sum(pen * theta**2)
    grad = grad + l2 * pen * theta
    hess = hess + np.diag(l2 * pen)
    return float(loss), grad, hess


def logistic_term_gradient(theta, x, y):
    """Gradient of ``log(1 + exp(-y theta.x))`` for a single row."""
    return -y * x * _sigmoid(-y * (x @ theta))


def newton_logistic(A, y, w, l2=0.0, fit_intercept=True, max_iterations=500,
                    gradient_tol=1e-8, theta0=None):
    """Damped Newton (equivalently IRLS) for weighted logistic regression.

    Each Newton step is the weighted least-squares solve with working
    weights ``w p (1 - p)`` and working response
    ``eta + (y01 - p) / (p (1 - p))``. Steps are halved (at most 50 times)
    until the objective does not increase. Returns
    ``(theta, converged, n_iter, loss, grad_norm)``.
    """
    theta = np.zeros(A.shape[1]) if theta0 is None else np.array(theta0, dtype=float)
    loss, grad, hess = logistic_objective(theta, A, y, w, l2, fit_intercept)
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        gnorm = np.linalg.norm(grad)
        if gnorm < gradient_tol:
            converged = True
            it -= 1
            break
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        for _ in range(51):
            cand = theta - t * step
            c_loss, c_grad, c_hess = logistic_objective(cand, A, y, w, l2, fit_intercept)
            if c_loss <= loss + 1e-15 * max(1.0, abs(loss)):
                break
            t *= 0.5
        else:
            break
        theta, loss, grad, hess = cand, c_loss, c_grad, c_hess
    else:
        converged = np.linalg.norm(grad) < gradient_tol
    return theta, converged, it, loss, float(np.linalg.norm(grad))


def fit_logistic(X, y, w=None, config=None):
    """Weighted L2-regularized logistic regression on labels in {-1, +1}.

    Minimizes ``(1/n) sum_i w_i log(1 + exp(-y_i (b0 + x_i @ beta)))
    + (lambda2 / 2) ||beta||^2`` with :func:`newton_logistic`, stopping at
    gradient norm 1e-8. Without regularization on separable data the optimum
    does not exist; the fit then stops at ``max_iterations``, when the line
    search stalls or when the gradient underflows, and is flagged
    ``converged=False`` whenever the fitted scores separate the classes.
    """
    config = config or EstimatorConfig(method="logistic", max_iterations=500)
    X = check_design(X, min_rows=1)
    y = check_response(y, X.shape[0], task="binary")
    w = check_weights(w, X.shape[0])
    active = w > 0
    if np.unique(y[active]).size < 2:
        raise OneClassOnly("both classes must be present among positively weighted rows")
    A = _augment(X, config.fit_intercept)
    theta, converged, it, loss, gnorm = newton_logistic(
        A, y, w, config.lambda2, config.fit_intercept, config.max_iterations, 1e-8
    )
    if config.lambda2 == 0 and np.all(y[active] * (A[active] @ theta) > 0):
        # Perfect separation: the loss keeps falling as the slopes grow, so a
        # small gradient does not indicate an optimum.
        converged = False
        warnings.warn("data are linearly separable and lambda2 = 0; the unregularized "
                      "optimum does not exist", ConvergenceWarning, stacklevel=2)
    elif not converged:
        warnings.warn(
            f"logistic fit stopped with gradient norm {gnorm:.3g} "
            "(separable data or iteration cap)",
            ConvergenceWarning,
            stacklevel=2,
        )
    if config.fit_intercept:
        coefs = Coefficients(theta[0], theta[1:])
    else:
        coefs = Coefficients(0.0, theta)
    return FitResult(coefs, bool(converged), it, loss)


# --------------------------------------------------------------------------
# dispatch and cross-validation

def fit_config(X, y, w, config, penalty=None):
    """Fit whichever model ``config.method`` names."""
    if config.method == "logistic":
        return fit_logistic(X, y, w, config)
    if config.method == "ols":
        return fit_wls(X, y, w, config)
    return fit_coordinate_descent(X, y, w, config, penalty)


def validation_loss(coefs, X, y, w, method):
    score = coefs.predict(X)
    if method == "logistic":
        return float(np.sum(w * _log1pexp(-y * score)) / w.sum())
    return float(np.sum(w * (y - score) ** 2) / w.sum())


def kfold_indices(n, k_folds, rng):
    perm = make_rng(rng).permutation(n)
    return np.array_split(perm, k_folds)


def cross_validate(X, y, w, method, grid, k_folds=5, rng=0, base_config=None, n_jobs=None):
    """Pick ``(lambda1, lambda2)`` from ``grid`` by k-fold cross-validation.

    Rows are shuffled once with ``rng`` and split into ``k_folds`` folds.
    Weights travel with their rows and are renormalized to unit mean inside
    each training fold; the validation loss (squared error, or log-loss for
    ``logistic``) is weighted by the validation rows' weights. Ties go to the
    larger ``lambda1``, then the larger ``lambda2``. ULasso grid points
    whose objective is not convex score ``inf``.

    Returns ``(best_config, scores)`` where ``scores`` maps each grid point
    to its mean validation loss.
    """
    X = check_design(X)
    n = X.shape[0]
    y = check_response(y, n, task="binary" if method == "logistic" else "regression")
    w = check_weights(w, n)
    grid = [tuple(float(v) for v in g) for g in grid]
    if not grid:
        raise SRDOError("cross-validation grid is empty")
    if k_folds < 2:
        raise SRDOError("k_folds must be at least 2")
    base = base_config or EstimatorConfig(method=method)
    base = replace(base, method=method)
    if len(grid) == 1:
        return replace(base, lambda1=grid[0][0], lambda2=grid[0][1]), {grid[0]: float("nan")}

    folds = kfold_indices(n, k_folds, rng)
    penalty = None
    if method in ("ulasso", "iilasso"):
        penalty = build_penalty_matrix(X, method)

    def score(point):
        cfg = replace(base, lambda1=point[0], lambda2=point[1])
        losses = []
        for k in range(k_folds):
            val = folds[k]
            tr = np.concatenate([folds[i] for i in range(k_folds) if i != k])
            w_tr = normalize_weights(w[tr])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                try:
                    fit = fit_config(X[tr], y[tr], w_tr, cfg, penalty)
                except IndefinitePenalty:
                    return float("inf")
            losses.append(validation_loss(fit.coefficients, X[val], y[val], w[val], method))
        return float(np.mean(losses))

    if n_jobs and n_jobs != 1:
        from joblib import Parallel, delayed

        values = Parallel(n_jobs=n_jobs)(delayed(score)(g) for g in grid)
    else:
        values = [score(g) for g in grid]
    scores = dict(zip(grid, values))
    if not any(np.isfinite(v) for v in values):
        raise IndefinitePenalty("every grid point gives a non-convex objective")
    best = min(grid, key=lambda g: (scores[g], -g[0], -g[1]))
    return replace(base, lambda1=best[0], lambda2=best[1]), scores


def default_grid(method):
    l1 = (0.0, 1e-3, 3e-3, 1e-2, 3e-2, 0.1)
    if method == "ols":
        return [(0.0, 0.0)]
    if method == "lasso":
        return [(a, 0.0) for a in l1]
    if method == "logistic":
        return [(0.0, b) for b in (1e-4, 1e-3, 1e-2, 0.1)]
    l2 = (0.0, 1e-3, 1e-2, 0.1)
    return list(itertools.product(l1, l2))


def lambda_max(X, y, w=None):
    """Smallest ``lambda1`` for which the weighted Lasso solution is all zero.

    Equals ``2 max_j |Xc_j^T W yc| / n``; the factor 2 comes from the
    unhalved squared loss.
    """
    X, y, w = _prepare(X, y, w)
    Xc, yc, _, _ = _weighted_center(X, y, w, True)
    return float(2 * np.max(np.abs(Xc.T @ (w * yc))) / X.shape[0])


# --------------------------------------------------------------------------
# estimator classes

class _LinearBase(RegressorMixin, BaseEstimator):
    def _store(self, result, n_features):
        self.coef_ = np.array(result.slopes)
        self.intercept_ = result.intercept
        self.converged_ = result.converged
        self.n_iter_ = result.n_iter
        self.objective_ = result.objective
        self.n_features_in_ = n_features
        return self

    @property
    def coefficients_(self):
        check_is_fitted(self, "coef_")
        return Coefficients(self.intercept_, self.coef_)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.coefficients_.predict(check_design(X, min_rows=1))


class WeightedLeastSquares(_LinearBase):
    """Ordinary / weighted least squares with an unpenalized intercept.

    Parameters
    ----------
    fit_intercept : bool, default=True
    """

    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y, sample_weight=None):
        X = check_design(X)
        w = None if sample_weight is None else normalize_weights(sample_weight)
        cfg = EstimatorConfig("ols", fit_intercept=self.fit_intercept)
        return self._store(fit_wls(X, y, w, cfg), X.shape[1])


class PenalizedLinearRegression(_LinearBase):
    """Lasso / Elastic Net / ULasso / IILasso by coordinate descent.

    Parameters
    ----------
    method : {"lasso", "elastic_net", "ulasso", "iilasso", "ols"}
    lambda1 : float
        l1 strength.
    lambda2 : float
        Strength of the quadratic (elastic net), ``beta^T C beta`` (ULasso)
        or ``|beta|^T R |beta|`` (IILasso) term.
    fit_intercept : bool
    max_iter : int
    tol : float
        Stop when the largest coefficient change in a sweep is below this.
    """

    def __init__(self, method="lasso", lambda1=0.0, lambda2=0.0, fit_intercept=True,
                 max_iter=10_000, tol=1e-8):
        self.method = method
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.fit_intercept = fit_intercept
        self.max_iter = max_iter
        self.tol = tol

    def _config(self):
        return EstimatorConfig(self.method, self.lambda1, self.lambda2,
                               self.fit_intercept, self.max_iter, self.tol)

    def fit(self, X, y, sample_weight=None):
        X = check_design(X)
        w = None if sample_weight is None else normalize_weights(sample_weight)
        return self._store(fit_coordinate_descent(X, y, w, self._config()), X.shape[1])


class WeightedLogisticRegression(ClassifierMixin, BaseEstimator):
    """Weighted logistic regression fitted by damped Newton.

    Accepts any two-valued labels; the sorted first label maps to -1.
    """

    def __init__(self, lambda2=0.0, fit_intercept=True, max_iter=500):
        self.lambda2 = lambda2
        self.fit_intercept = fit_intercept
        self.max_iter = max_iter

    def fit(self, X, y, sample_weight=None):
        X = check_design(X)
        y = np.asarray(y).ravel()
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise OneClassOnly(f"need exactly two classes, got {self.classes_.size}")
        ypm = np.where(y == self.classes_[1], 1.0, -1.0)
        w = None if sample_weight is None else normalize_weights(sample_weight)
        cfg = EstimatorConfig("logistic", 0.0, self.lambda2, self.fit_intercept, self.max_iter)
        res = fit_logistic(X, ypm, w, cfg)
        self.coef_ = np.array(res.slopes)
        self.intercept_ = res.intercept
        self.converged_ = res.converged
        self.n_iter_ = res.n_iter
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def coefficients_(self):
        check_is_fitted(self, "coef_")
        return Coefficients(self.intercept_, self.coef_)

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return self.coefficients_.predict(check_design(X, min_rows=1))

    def predict_proba(self, X):
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        return np.where(self.decision_function(X) > 0, self.classes_[1], self.classes_[0])
