"""Synthetic regression data with block collinearity and an eigenvector bias.

The design is ``X ~ N(0, Sigma)`` with ``Sigma`` block diagonal (blocks of
size ``s`` with unit diagonal and constant off-diagonal ``rho``). The
response is::

    y = X @ beta + beta0 + b(X) + noise,    b(X) = X @ v

where ``v`` is the unit eigenvector of the centered sample covariance of
``X`` belonging to its smallest eigenvalue.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Coefficients,
    LabeledDataset,
    child_seed,
    make_rng,
    smallest_eigenpair,
    weighted_covariance,
)
from .exceptions import (
    DegenerateEigenspaceWarning,
    DimensionMismatch,
    InvalidRho,
    NotPositiveDefinite,
    SRDOError,
)

#: slopes used for the default ten-variable scenario
REFERENCE_SLOPES = (0.2, -0.4, 0.6, -0.8, 1.0, -0.2, 0.4, -0.6, 0.8, -1.0)

CHOLESKY_PIVOT_TOL = 1e-12
EIGEN_GAP_TOL = 1e-8


def rho_bounds(s):
    """Open interval of ``rho`` for which an ``s x s`` equicorrelation block is PD."""
    if s <= 1:
        return (-np.inf, np.inf)
    return (-1.0 / (s - 1), 1.0)


@dataclass(frozen=True)
class CovarianceSpec:
    p: int
    s: int
    rho_per_block: tuple[float, ...]

    def __post_init__(self):
        if self.p < 1 or self.s < 1:
            raise DimensionMismatch("p and s must be positive")
        if self.p % self.s:
            raise DimensionMismatch(f"p={self.p} is not divisible by block size s={self.s}")
        rho = tuple(float(r) for r in np.atleast_1d(self.rho_per_block))
        if len(rho) == 1:
            rho = rho * self.q
        if len(rho) != self.q:
            raise DimensionMismatch(f"need {self.q} block correlations, got {len(rho)}")
        lo, hi = rho_bounds(self.s)
        for r in rho:
            if not lo < r < hi:
                raise InvalidRho(
                    f"rho={r} makes a {self.s}x{self.s} block indefinite; "
                    f"need {lo:.6g} < rho < {hi:.6g}"
                )
        object.__setattr__(self, "rho_per_block", rho)

    @property
    def q(self):
        return self.p // self.s

    @classmethod
    def uniform(cls, p, s, rho):
        return cls(p, s, (float(rho),))


def build_block_covariance(spec):
    """Block-diagonal covariance: ones on the diagonal, ``rho_l`` inside block ``l``."""
    S = np.zeros((spec.p, spec.p))
    for l, rho in enumerate(spec.rho_per_block):
        sl = slice(l * spec.s, (l + 1) * spec.s)
        S[sl, sl] = rho
    np.fill_diagonal(S, 1.0)
    return S


def _cholesky(S):
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("covariance is not positive definite") from exc
    if np.min(np.diag(L)) ** 2 <= CHOLESKY_PIVOT_TOL:
        raise NotPositiveDefinite("Cholesky pivot below 1e-12")
    return L


def sample_design(n, cov, rng):
    """Draw ``n`` i.i.d. rows from ``N(0, cov)`` via the Cholesky factor."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    L = _cholesky(cov)
    rng = make_rng(rng)
    Z = rng.standard_normal((n, cov.shape[0]))
    return Z @ L.T


def bias_vector(X):
    """Misspecification term ``b = X @ v`` for the smallest-eigenvalue direction.

    ``v`` is the unit eigenvector of the centered covariance
    ``n^-1 sum (x_i - xbar)(x_i - xbar)^T`` for its smallest eigenvalue, with
    the sign chosen so its first nonzero component is positive. ``X`` is used
    uncentered in the product; any constant offset lands in the intercept.

    Returns ``(b, v, gamma2)``. Warns with
    :class:`DegenerateEigenspaceWarning` when the smallest eigenvalue is not
    separated from the next one by more than 1e-8.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n <= p:
        raise DimensionMismatch(f"bias construction needs n > p (n={n}, p={p})")
    _, cov = weighted_covariance(X)
    gamma2, v, gap = smallest_eigenpair(cov)
    if gap <= EIGEN_GAP_TOL:
        warnings.warn(
            f"smallest eigenvalue {gamma2:.3g} is degenerate (gap {gap:.3g}); "
            "eigenvector chosen by solver order and sign rule",
            DegenerateEigenspaceWarning,
            stacklevel=2,
        )
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-15)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return X @ v, v, gamma2


def generate_response(X, beta, b, noise_std, rng):
    """``y = X @ slopes + intercept + b + N(0, noise_std^2)``."""
    X = np.asarray(X, dtype=float)
    b = np.zeros(X.shape[0]) if b is None else np.asarray(b, dtype=float)
    if b.shape[0] != X.shape[0]:
        raise DimensionMismatch("bias length does not match rows of X")
    if noise_std < 0:
        raise SRDOError("noise_std must be nonnegative")
    y = beta.predict(X) + b
    if noise_std > 0:
        y = y + noise_std * make_rng(rng).standard_normal(X.shape[0])
    return y


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    spec: CovarianceSpec
    beta_true: Coefficients
    noise_std: float = 1.0
    seed: int = 0
    reuse_train_v: bool = False

    def __post_init__(self):
        if self.beta_true.p != self.spec.p:
            raise DimensionMismatch(
                f"beta has {self.beta_true.p} slopes but spec has p={self.spec.p}"
            )
        if self.noise_std <= 0:
            raise SRDOError("noise_std must be positive")

    def to_dict(self):
        return {
            "n": self.n,
            "p": self.spec.p,
            "block_size": self.spec.s,
            "rho_per_block": list(self.spec.rho_per_block),
            "beta_intercept": self.beta_true.intercept,
            "beta_slopes": self.beta_true.slopes.tolist(),
            "noise_std": self.noise_std,
            "seed": self.seed,
            "reuse_train_v": self.reuse_train_v,
        }


@dataclass
class EnvironmentSuite:
    train: LabeledDataset
    tests: list = field(default_factory=list)

    def all(self):
        return [self.train, *self.tests]


def _environment(n, spec, beta, noise_std, seed, tag, v=None):
    rng = make_rng(seed)
    X = sample_design(n, build_block_covariance(spec), rng)
    if v is None:
        b, v, gamma2 = bias_vector(X)
    else:
        b = X @ v
        _, cov = weighted_covariance(X)
        gamma2 = float(np.linalg.eigvalsh(cov)[0])
    y = generate_response(X, beta, b, noise_std, rng)
    names = tuple(f"x{j + 1}" for j in range(spec.p))
    meta = {"rho": list(spec.rho_per_block), "v": v.tolist(), "gamma2": gamma2,
            "max_abs_bias": float(np.max(np.abs(b)))}
    return LabeledDataset(X, y, tag, names, meta), v


def generate_environment_suite(config, rho_test_list, rng=None):
    """Training set plus one shifted test set per entry of ``rho_test_list``.

    All environments share ``beta_true`` and the bias rule. Each environment
    gets its own child seed ``child_seed(seed, k)`` (``k = 0`` for training),
    so environments can be generated in any order or in parallel with
    identical results. By default ``v`` is recomputed from each environment's
    own design; ``config.reuse_train_v`` reuses the training ``v`` instead.
    ``rng`` overrides ``config.seed`` when given.
    """
    seed = config.seed if rng is None else rng
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2**63 - 1))
    spec = config.spec
    train, v_train = _environment(
        config.n, spec, config.beta_true, config.noise_std,
        child_seed(seed, 0), f"train rho={_fmt_rho(spec)}",
    )
    tests = []
    for k, rho in enumerate(rho_test_list, start=1):
        tspec = CovarianceSpec(spec.p, spec.s, tuple(np.broadcast_to(rho, (spec.q,)).tolist()))
        env, _ = _environment(
            config.n, tspec, config.beta_true, config.noise_std,
            child_seed(seed, k), f"rho={_fmt_rho(tspec)}",
            v=v_train if config.reuse_train_v else None,
        )
        tests.append(env)
    return EnvironmentSuite(train, tests)


def _fmt_rho(spec):
    vals = set(spec.rho_per_block)
    if len(vals) == 1:
        return f"{spec.rho_per_block[0]:g}"
    return "[" + ",".join(f"{r:g}" for r in spec.rho_per_block) + "]"


def reference_config(n=1000, rho=0.9, seed=0, noise_std=1.0, p=10, s=2):
    """The ten-variable, block-size-two scenario with :data:`REFERENCE_SLOPES`."""
    return SimulationConfig(
        n=n,
        spec=CovarianceSpec.uniform(p, s, rho),
        beta_true=Coefficients(0.0, np.asarray(REFERENCE_SLOPES[:p])),
        noise_std=noise_std,
        seed=seed,
    )


__all__ = [
    "CovarianceSpec",
    "EnvironmentSuite",
    "REFERENCE_SLOPES",
    "SimulationConfig",
    "bias_vector",
    "build_block_covariance",
    "generate_environment_suite",
    "generate_response",
    "reference_config",
    "rho_bounds",
    "sample_design",
]
