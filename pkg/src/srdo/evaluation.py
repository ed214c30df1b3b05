"""Metrics, multi-environment reports and the repeated-experiment harness."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .core import child_seed, normalize_weights
from .decorrelate import SrdoConfig, classification_weights, srdo
from .estimators import EstimatorConfig, cross_validate, default_grid, fit_config
from .exceptions import ConvergenceWarning, DimensionMismatch, EmptyInput, OneClassOnly, SRDOError
from .simgen import SimulationConfig, generate_environment_suite

MAX_FAILURE_FRACTION = 0.10


def beta_error(estimate, truth):
    """l1 distance between slope vectors; intercepts are ignored."""
    a = np.asarray(getattr(estimate, "slopes", estimate), dtype=float)
    b = np.asarray(getattr(truth, "slopes", truth), dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape[0]} slopes vs {b.shape[0]} slopes")
    return float(np.abs(a - b).sum())


def rmse(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise DimensionMismatch("y and y_hat differ in length")
    if y.size == 0:
        raise EmptyInput("rmse of an empty vector")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def auc(scores, labels):
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Equals the probability that a random positive outscores a random
    negative, counting ties as one half. Labels are -1/+1.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise DimensionMismatch("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("AUC needs both classes")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvaluationReport:
    per_environment: list
    mean_metric: float
    std_metric: float
    metric_kind: str = "rmse"
    repetitions: int = 1
    beta_error: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "metric_kind": self.metric_kind,
            "per_environment": [{"environment": t, "value": v} for t, v in self.per_environment],
            "mean_metric": self.mean_metric,
            "std_metric": self.std_metric,
            "std_convention": "population (divide by number of environments)",
            "repetitions": self.repetitions,
            "beta_error": self.beta_error,
        }
        d.update(self.extra)
        return d


def _metric(coefs, ds, metric_kind):
    score = coefs.predict(ds.X)
    if metric_kind == "rmse":
        return rmse(ds.y, score)
    if metric_kind == "auc":
        return auc(score, ds.y)
    raise SRDOError(f"unknown metric {metric_kind!r}")


def evaluate_suite(model, suite, metric_kind="rmse", truth=None):
    """Score ``model`` on every environment of ``suite``, in order.

    Reports the per-environment values with their mean and population
    standard deviation. For ``auc`` the score is ``b0 + x @ beta``.
    """
    if not suite:
        raise EmptyInput("empty environment suite")
    per = []
    for k, ds in enumerate(suite):
        if ds.X.shape[1] != model.p:
            raise DimensionMismatch(
                f"environment {k} has {ds.X.shape[1]} columns, model has {model.p}"
            )
        per.append((ds.environment_tag or f"env{k}", _metric(model, ds, metric_kind)))
    vals = np.array([v for _, v in per])
    return EvaluationReport(
        per, float(vals.mean()), float(vals.std()), metric_kind,
        beta_error=None if truth is None else beta_error(model, truth),
    )


# --------------------------------------------------------------------------
# experiment harness

@dataclass(frozen=True)
class MethodSpec:
    """A fitting method, optionally preceded by decorrelating reweighting.

    ``name`` is ``"<base>"`` or ``"srdo+<base>"`` with ``<base>`` one of the
    estimator methods. ``grid`` lists ``(lambda1, lambda2)`` candidates for
    cross-validation; a single point is used as is.
    """

    name: str
    grid: tuple = ()

    @property
    def reweight(self):
        return self.name.startswith("srdo+")

    @property
    def base(self):
        return self.name.split("+", 1)[1] if self.reweight else self.name

    def resolved_grid(self):
        return tuple(self.grid) if self.grid else tuple(default_grid(self.base))

    @classmethod
    def parse(cls, name, grid=None):
        spec = cls(name, tuple(tuple(map(float, g)) for g in (grid or ())))
        EstimatorConfig(spec.base)  # validates the base name
        return spec


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one repetition needs (simulation route)."""

    simulation: SimulationConfig
    rho_test: tuple
    methods: tuple
    srdo: SrdoConfig = SrdoConfig()
    k_folds: int = 5
    metric: str = "rmse"


def run_once(spec, seed, repetition=0, keep_weights=False):
    """One repetition: simulate, reweight, fit every method, evaluate.

    Child seeds: data ``child_seed(seed, r, 0)``, reweighting
    ``child_seed(seed, r, 1)``, cross-validation folds ``child_seed(seed, r, 2)``.
    """
    sim = replace(spec.simulation, seed=child_seed(seed, repetition, 0))
    suite = generate_environment_suite(sim, spec.rho_test)
    return fit_methods(suite.train, suite.tests, spec.methods, spec.srdo, seed, repetition,
                       k_folds=spec.k_folds, metric=spec.metric, truth=sim.beta_true,
                       keep_weights=keep_weights)


def _srdo_weights(train, srdo_config, task):
    if task == "binary":
        approx = fit_config(train.X, train.y, np.ones(train.n),
                            EstimatorConfig("logistic", 0.0, srdo_config.classifier_regularization))
        return classification_weights(train.X, approx.coefficients, srdo_config)
    return srdo(train.X, srdo_config)


def fit_methods(train, tests, methods, srdo_config, seed, repetition=0, *, k_folds=5,
                metric="rmse", truth=None, keep_weights=False):
    """Reweight (if any method asks for it), fit and score every method.

    ``train`` and ``tests`` are :class:`~srdo.core.LabeledDataset` objects.
    Reweighting uses ``child_seed(seed, repetition, 1)`` and CV folds
    ``child_seed(seed, repetition, 2)``. For ``metric="auc"`` the task is
    binary and SRDO runs in classification mode around an unweighted
    logistic fit. Returns a dict with one record per method.
    """
    task = "binary" if metric == "auc" else "regression"
    weights = None
    srdo_info = None
    if any(m.reweight for m in methods):
        res = _srdo_weights(train, replace(srdo_config, seed=child_seed(seed, repetition, 1)),
                            task)
        weights = res.weights.values
        srdo_info = res.to_dict()
    records = []
    for m in methods:
        w = weights if m.reweight else np.ones(train.n)
        grid = m.resolved_grid()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            if len(grid) > 1:
                cfg, _ = cross_validate(train.X, train.y, w, m.base, grid, k_folds,
                                        child_seed(seed, repetition, 2))
            else:
                cfg = EstimatorConfig(m.base, *grid[0])
            fit = fit_config(train.X, train.y, w, cfg)
        nonempty = [ds for ds in tests if ds.n > 0]
        report = evaluate_suite(fit.coefficients, nonempty, metric) if nonempty else None
        records.append({
            "repetition": repetition,
            "method": m.name,
            "lambda1": cfg.lambda1,
            "lambda2": cfg.lambda2,
            "converged": fit.converged,
            "objective": fit.objective,
            "coefficients": fit.coefficients.to_dict(),
            "beta_error": None if truth is None else beta_error(fit.coefficients, truth),
            "train_metric": _metric(fit.coefficients, train, metric),
            "per_environment": report.per_environment if report else [],
            "mean_metric": report.mean_metric if report else float("nan"),
            "std_metric": report.std_metric if report else float("nan"),
        })
    out = {"repetition": repetition, "records": records, "srdo": srdo_info}
    if keep_weights:
        out["weights"] = weights
    return out


def _safe_run(spec, seed, r, keep_weights, runner=None):
    try:
        if runner is not None:
            return runner(seed, r, keep_weights)
        return run_once(spec, seed, r, keep_weights)
    except SRDOError as exc:
        return {"repetition": r, "error": f"{type(exc).__name__}: {exc}"}


def aggregate(runs, methods, metric="rmse"):
    """Fold per-run records into one summary per method.

    For the headline per-environment numbers the run with the best training
    metric is used (lowest RMSE, highest AUC); all-run averages are
    reported alongside so the optimistic selection can be audited.
    """
    ok = [r for r in runs if "error" not in r]
    summary = {}
    for m in methods:
        recs = [rec for r in ok for rec in r["records"] if rec["method"] == m.name]
        if not recs:
            continue
        be = np.array([np.nan if rec["beta_error"] is None else rec["beta_error"]
                       for rec in recs])
        train = np.array([rec["train_metric"] for rec in recs])
        best = int(np.argmax(train) if metric == "auc" else np.argmin(train))
        head = recs[best]
        means = np.array([rec["mean_metric"] for rec in recs])
        stds = np.array([rec["std_metric"] for rec in recs])
        n_env = len(head["per_environment"])
        env_avg = []
        if n_env:
            vals = np.array([[v for _, v in rec["per_environment"]] for rec in recs])
            env_avg = [(head["per_environment"][k][0], float(vals[:, k].mean()))
                       for k in range(n_env)]
        headline = EvaluationReport(
            list(head["per_environment"]), head["mean_metric"], head["std_metric"],
            metric, len(recs), None if np.isnan(be).all() else float(be.mean()),
            extra={
                "headline_repetition": head["repetition"],
                "beta_error_std_across_repetitions":
                    None if np.isnan(be).all() else float(be.std()),
                "all_runs": {
                    "per_environment_mean": [{"environment": t, "value": v} for t, v in env_avg],
                    "mean_metric": float(means.mean()),
                    "std_metric": float(stds.mean()),
                    "mean_metric_std_across_repetitions": float(means.std()),
                },
            },
        )
        summary[m.name] = headline
    return summary


def repetition_harness(spec, repetitions, seed, n_jobs=1, keep_weights=False, runner=None):
    """Run ``repetitions`` independent repetitions and aggregate them.

    Repetition ``r`` derives all its randomness from ``(seed, r)``, so runs
    can be executed in parallel (``n_jobs``) with results identical to the
    serial order. Failed runs are recorded and excluded; more than 10%
    failures raises :class:`SRDOError`.

    ``runner(seed, r, keep_weights)``, when given, replaces
    :func:`run_once` (the CSV route passes a closure over its datasets);
    ``spec`` then only needs ``methods`` and ``metric`` attributes.

    Returns ``(summary, runs)`` with ``summary`` mapping method name to an
    :class:`EvaluationReport`.
    """
    if repetitions < 1:
        raise SRDOError("repetitions must be at least 1")
    if n_jobs and n_jobs != 1:
        from joblib import Parallel, delayed

        runs = Parallel(n_jobs=n_jobs)(
            delayed(_safe_run)(spec, seed, r, keep_weights, runner) for r in range(repetitions)
        )
    else:
        runs = [_safe_run(spec, seed, r, keep_weights, runner) for r in range(repetitions)]
    failed = [r for r in runs if "error" in r]
    if len(failed) > MAX_FAILURE_FRACTION * repetitions:
        raise SRDOError(
            f"{len(failed)} of {repetitions} repetitions failed; first: {failed[0]['error']}"
        )
    summary = aggregate(runs, spec.methods, spec.metric)
    for rep in summary.values():
        rep.extra["failed_runs"] = len(failed)
    return summary, runs


def fit_on_dataset(train, method, w=None, grid=None, k_folds=5, seed=0):
    """Fit one method to a :class:`LabeledDataset`, with CV when ``grid`` has
    several points. Used by the CSV route of the experiment runner."""
    w = np.ones(train.n) if w is None else normalize_weights(w)
    grid = tuple(grid) if grid else tuple(default_grid(method))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        if len(grid) > 1:
            cfg, _ = cross_validate(train.X, train.y, w, method, grid, k_folds, seed)
        else:
            cfg = EstimatorConfig(method, *grid[0])
        return cfg, fit_config(train.X, train.y, w, cfg)


__all__ = [
    "EvaluationReport",
    "ExperimentSpec",
    "MethodSpec",
    "aggregate",
    "auc",
    "beta_error",
    "evaluate_suite",
    "fit_methods",
    "fit_on_dataset",
    "repetition_harness",
    "rmse",
    "run_once",
]
