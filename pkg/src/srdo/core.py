"""Shared data types and small numeric utilities.

All moments in this package use the population convention (divide by ``n``,
or by ``sum(w)`` when weighted), not the ``n - 1`` sample convention that
numpy/pandas default to. Standardized columns therefore have
``X.std(axis=0, ddof=0) == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    DegenerateWeightedVariance,
    DimensionMismatch,
    NotSymmetric,
    SRDOError,
    ZeroVarianceColumn,
)

DEGENERATE_VARIANCE = 1e-12
WEIGHT_MEAN_TOL = 1e-9


# --------------------------------------------------------------------------
# validation helpers

def check_design(X, *, min_rows=2, column_names=None):
    """Validate a design matrix and return it as a 2-d float64 array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"design matrix must be 2-d, got shape {X.shape}")
    n, p = X.shape
    if n < min_rows:
        raise DimensionMismatch(f"need at least {min_rows} rows, got {n}")
    if p < 1:
        raise DimensionMismatch("design matrix has no columns")
    if not np.all(np.isfinite(X)):
        raise SRDOError("design matrix contains non-finite entries")
    if column_names is not None:
        if len(column_names) != p or len(set(column_names)) != p:
            raise DimensionMismatch(
                f"column_names must hold {p} unique entries, got {list(column_names)}"
            )
    return X


def check_response(y, n, task="regression"):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise DimensionMismatch(f"response has {y.shape[0]} rows, design has {n}")
    if not np.all(np.isfinite(y)):
        raise SRDOError("response contains non-finite entries")
    if task == "binary" and not np.all(np.isin(y, (-1.0, 1.0))):
        raise SRDOError("binary response must be coded as -1/+1")
    return y


def check_weights(w, n):
    """Return ``w`` as a float array after checking the SampleWeights contract.

    ``None`` means uniform weights. Weights must be finite, nonnegative and
    have unit mean.
    """
    if w is None:
        return np.ones(n)
    if isinstance(w, SampleWeights):
        w = w.values
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != n:
        raise DimensionMismatch(f"{w.shape[0]} weights for {n} rows")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise SRDOError("sample weights must be finite and nonnegative")
    if abs(w.mean() - 1.0) > WEIGHT_MEAN_TOL:
        raise SRDOError(f"sample weights must have unit mean, got {w.mean():.12g}")
    return w


def normalize_weights(w):
    """Rescale nonnegative weights to unit mean."""
    w = np.asarray(w, dtype=float)
    total = w.sum()
    if not total > 0:
        raise SRDOError("weights sum to zero")
    return w * (w.shape[0] / total)


# --------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class SampleWeights:
    """Nonnegative per-sample weights with unit mean."""

    values: np.ndarray
    clip_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        check_weights(values, values.shape[0])
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @classmethod
    def uniform(cls, n):
        return cls(np.ones(n))

    @property
    def second_moment(self):
        return float(np.mean(self.values**2))

    @property
    def effective_sample_size(self):
        return effective_sample_size(self.values)


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Intercept plus slope vector of a linear model."""

    intercept: float
    slopes: np.ndarray

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float).ravel().copy()
        slopes.setflags(write=False)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercept", float(self.intercept))
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(slopes))):
            raise SRDOError("coefficients must be finite")

    def __eq__(self, other):
        if not isinstance(other, Coefficients):
            return NotImplemented
        return self.intercept == other.intercept and np.array_equal(self.slopes, other.slopes)

    __hash__ = None

    @property
    def p(self):
        return self.slopes.shape[0]

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.p:
            raise DimensionMismatch(f"model has {self.p} slopes, data has {X.shape[1]} columns")
        return self.intercept + X @ self.slopes

    def to_dict(self):
        return {"intercept": self.intercept, "slopes": self.slopes.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["intercept"], np.asarray(d["slopes"], dtype=float))


@dataclass(frozen=True)
class CorrelationDiagnostics:
    correlation: np.ndarray
    smallest_eigenvalue: float
    max_offdiag: float
    mean_abs_offdiag: float
    gershgorin_bound: float
    weight_second_moment: float
    effective_sample_size: float

    def to_dict(self, include_matrix=False):
        d = {
            "smallest_eigenvalue": self.smallest_eigenvalue,
            "max_offdiag": self.max_offdiag,
            "mean_abs_offdiag": self.mean_abs_offdiag,
            "gershgorin_bound": self.gershgorin_bound,
            "weight_second_moment": self.weight_second_moment,
            "effective_sample_size": self.effective_sample_size,
        }
        if include_matrix:
            d["correlation"] = self.correlation.tolist()
        return d


# --------------------------------------------------------------------------
# standardization

@dataclass(frozen=True)
class StandardizationRecord:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.mean.shape[0]:
            raise DimensionMismatch(
                f"record covers {self.mean.shape[0]} columns, data has {X.shape[1]}"
            )
        return (X - self.mean) / self.std

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}


def standardize(X, column_names=None):
    """Center each column and scale it to unit population standard deviation.

    Returns the standardized matrix and the record needed to apply the same
    transform to held-out data. Raises :class:`ZeroVarianceColumn` for a
    constant column.
    """
    X = check_design(X, column_names=column_names)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for j in range(X.shape[1]):
        # relative test so that large-offset constant columns are still caught
        if std[j] <= 1e-12 * max(1.0, abs(mean[j])):
            raise ZeroVarianceColumn(column_names[j] if column_names is not None else j)
    record = StandardizationRecord(mean, std)
    return record.apply(X), record


class Standardizer(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`standardize` (population std)."""

    def fit(self, X, y=None):
        _, record = standardize(X)
        self.mean_ = record.mean
        self.scale_ = record.std
        self.n_features_in_ = record.mean.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        return StandardizationRecord(self.mean_, self.scale_).apply(X)


# --------------------------------------------------------------------------
# moments and spectra

def effective_sample_size(w):
    w = np.asarray(w, dtype=float)
    return float(w.sum() ** 2 / np.sum(w**2))


def gershgorin_bound(p, max_offdiag):
    """Lower bound ``1 - (p-1) * xi`` on the smallest eigenvalue of a
    correlation matrix whose off-diagonal entries are bounded by ``xi``."""
    return 1.0 - (p - 1) * max_offdiag


def smallest_eigenvalue(S, *, tol=1e-9):
    """Smallest eigenvalue of a symmetric matrix."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"matrix is not square: {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=tol):
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])


def smallest_eigenpair(S):
    """Return ``(eigenvalue, eigenvector, gap)`` for the smallest eigenvalue.

    ``gap`` is the distance to the next eigenvalue (``inf`` for 1x1).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    smallest_eigenvalue(S)  # symmetry check
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    gap = float(vals[1] - vals[0]) if vals.shape[0] > 1 else np.inf
    return float(vals[0]), vecs[:, 0], gap


def weighted_covariance(X, w=None):
    """Population-convention weighted mean and covariance."""
    X = np.asarray(X, dtype=float)
    w = np.ones(X.shape[0]) if w is None else np.asarray(w, dtype=float)
    total = w.sum()
    mean = w @ X / total
    Xc = X - mean
    cov = (Xc * w[:, None]).T @ Xc / total
    return mean, 0.5 * (cov + cov.T)


def weighted_correlation(X, w=None):
    """Weighted correlation matrix of ``X`` plus conditioning diagnostics.

    ``w`` defaults to uniform weights. The returned
    :class:`CorrelationDiagnostics` reports the smallest eigenvalue of the
    correlation matrix, the largest absolute off-diagonal entry ``xi``, the
    Gershgorin lower bound ``1 - (p-1) xi``, ``mean(w**2)`` and the effective
    sample size ``(sum w)^2 / sum w^2``.
    """
    X = check_design(X)
    n, p = X.shape
    w = check_weights(w, n)
    _, cov = weighted_covariance(X, w)
    var = np.diag(cov).copy()
    for j in range(p):
        if var[j] < DEGENERATE_VARIANCE:
            raise DegenerateWeightedVariance(j, var[j])
    sd = np.sqrt(var)
    R = cov / np.outer(sd, sd)
    R = np.clip(0.5 * (R + R.T), -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    if p > 1:
        off = np.abs(R[~np.eye(p, dtype=bool)])
        xi = float(off.max())
        mean_off = float(off.mean())
    else:
        xi = mean_off = 0.0
    return CorrelationDiagnostics(
        correlation=R,
        smallest_eigenvalue=smallest_eigenvalue(R),
        max_offdiag=xi,
        mean_abs_offdiag=mean_off,
        gershgorin_bound=gershgorin_bound(p, xi),
        weight_second_moment=float(np.mean(w**2)),
        effective_sample_size=effective_sample_size(w),
    )


# --------------------------------------------------------------------------
# randomness

def make_rng(seed):
    """Seeded generator. ``seed`` is mandatory: there is no implicit entropy."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise SRDOError("a seed is required")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def child_seed(seed, *index):
    """Derive a 64-bit child seed from ``(seed, index...)``.

    Uses ``SeedSequence(seed, spawn_key=index)`` so children are independent
    of each other and of the parent stream, and stable across runs.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_seed(random_state):
    """Turn an int or Generator into an integer seed (Generators draw one)."""
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**63 - 1))
    if random_state is None:
        raise SRDOError("a seed is required")
    return int(random_state)


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    environment_tag: str | None = None
    column_names: tuple[str, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]
