"""Acceptance checks.

Each criterion prints one ``PASS``/``FAIL`` line with the measured values
and the tolerance it is judged against. The lines are also collected into
the pytest terminal summary. Run directly for the report alone::

    python3 tests/test_acceptance.py

Criteria that the implementation does not meet are reported as ``FAIL``
and their pytest test fails; thresholds are never relaxed to make them pass.
"""

from __future__ import annotations

import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from srdo.cli import main as cli_main
from srdo.core import Coefficients, child_seed, make_rng, normalize_weights, standardize
from srdo.decorrelate import SrdoConfig, column_shuffle, fit_density_ratio, srdo
from srdo.estimators import (
    EstimatorConfig,
    build_penalty_matrix,
    fit_coordinate_descent,
    fit_wls,
    logistic_objective,
)
from srdo.evaluation import ExperimentSpec, MethodSpec, auc, beta_error, repetition_harness, rmse
from srdo.exceptions import ConvergenceWarning
from srdo.simgen import (
    CovarianceSpec,
    SimulationConfig,
    build_block_covariance,
    generate_environment_suite,
    reference_config,
    sample_design,
)

pytestmark = pytest.mark.acceptance

RESULTS = []
RHO_TEST = (-0.9, -0.5, 0.0, 0.5, 0.9)


def report(number, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    print(line)
    RESULTS.append(line)
    return ok


# --------------------------------------------------------------------------
# 1. decorrelation efficacy

def criterion_1():
    t0 = time.perf_counter()
    S = build_block_covariance(CovarianceSpec.uniform(10, 2, 0.9))
    pairs = [(2 * k, 2 * k + 1) for k in range(5)]
    before, after, g0, g1 = [], [], [], []
    for s in range(30):
        X, _ = standardize(sample_design(2000, S, make_rng(child_seed(1, s))))
        res = srdo(X, SrdoConfig(seed=child_seed(1, s, 1)))
        before.append(np.mean([abs(res.before.correlation[i, j]) for i, j in pairs]))
        after.append(np.mean([abs(res.after.correlation[i, j]) for i, j in pairs]))
        g0.append(res.before.smallest_eigenvalue)
        g1.append(res.after.smallest_eigenvalue)
    elapsed = time.perf_counter() - t0
    b, a = float(np.mean(before)), float(np.mean(after))
    ok_corr = report("1a", a <= 0.45,
                     f"mean within-block |corr| {b:.3f} -> {a:.3f} (need <= 0.45)")
    ok_gamma = report("1b", np.mean(g1) > np.mean(g0),
                      f"smallest eigenvalue {np.mean(g0):.4f} -> {np.mean(g1):.4f} "
                      "(need weighted > unweighted)")
    ok_time = report("1c", elapsed < 60, f"runtime {elapsed:.1f} s (need < 60 s)")
    return ok_corr and ok_gamma and ok_time


# --------------------------------------------------------------------------
# 2. stability ordering

def _pipeline(n, methods, repetitions, seed):
    spec = ExperimentSpec(reference_config(n=n), RHO_TEST,
                          tuple(MethodSpec.parse(m) for m in methods), SrdoConfig())
    summary, _ = repetition_harness(spec, repetitions, seed)
    return summary


def criterion_2():
    t0 = time.perf_counter()
    summary = _pipeline(1000, ("ols", "lasso", "elastic_net", "srdo+ols"), 30, seed=2)
    elapsed = time.perf_counter() - t0
    be = {m: summary[m].beta_error for m in summary}
    std = {m: summary[m].extra["all_runs"]["std_metric"] for m in summary}
    head_std = {m: summary[m].std_metric for m in summary}
    ok_a = report("2a", be["srdo+ols"] < be["ols"],
                  f"mean beta error srdo+ols {be['srdo+ols']:.3f} vs ols {be['ols']:.3f} "
                  "(need srdo+ols < ols)")
    others = ("ols", "lasso", "elastic_net")
    ok_b = report("2b", all(std["srdo+ols"] < std[m] for m in others),
                  "across-environment RMSE std (mean over runs) srdo+ols "
                  f"{std['srdo+ols']:.3f} vs " + ", ".join(f"{m} {std[m]:.3f}" for m in others)
                  + "; best-training-run std " + ", ".join(
                      f"{m} {head_std[m]:.3f}" for m in summary)
                  + " (need srdo+ols below all three)")
    ok_band = report("2c", all(1.5 <= v <= 4.5 for v in be.values()),
                     "beta errors " + ", ".join(f"{m} {v:.3f}" for m, v in be.items())
                     + " (need all in [1.5, 4.5])")
    ok_time = report("2d", elapsed < 600, f"runtime {elapsed:.1f} s (need < 600 s)")
    return ok_a and ok_b and ok_band and ok_time


# --------------------------------------------------------------------------
# 3. small-n degradation versus large-n advantage

def criterion_3():
    small = _pipeline(500, ("ols", "srdo+ols"), 30, seed=3)
    report("3a", True,
           f"n=500 beta error srdo+ols {small['srdo+ols'].beta_error:.3f} vs ols "
           f"{small['ols'].beta_error:.3f} (informational: any ordering allowed)")
    large = _pipeline(10_000, ("ols", "srdo+ols"), 30, seed=4)
    s, o = large["srdo+ols"].beta_error, large["ols"].beta_error
    return report("3b", s <= 0.95 * o,
                  f"n=10000 beta error srdo+ols {s:.3f} vs ols {o:.3f}, margin "
                  f"{(o - s) / o:+.1%} (need srdo+ols <= 0.95 * ols)")


# --------------------------------------------------------------------------
# 4. error inflation with collinearity

def criterion_4():
    beta = Coefficients(0.0, [0.2, -0.4])
    errors = {}
    for rho in (0.0, 0.99):
        errs = []
        for s in range(10):
            cfg = SimulationConfig(100_000, CovarianceSpec.uniform(2, 2, rho), beta,
                                   seed=child_seed(4, s))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                train = generate_environment_suite(cfg, []).train
            fit = fit_wls(train.X, train.y)
            errs.append(np.linalg.norm(fit.slopes - beta.slopes))
        errors[rho] = float(np.mean(errs))
    ratio = errors[0.99] / errors[0.0]
    return report("4", ratio >= 3,
                  f"OLS ||beta_hat - beta||_2 at rho=0.99 {errors[0.99]:.3f} vs rho=0 "
                  f"{errors[0.0]:.3f}, ratio {ratio:.2f} (need >= 3)")


# --------------------------------------------------------------------------
# 5. solver oracles

def _random_problem(rng, n, p):
    Z = rng.normal(size=(n, p))
    X, _ = standardize(Z + 0.7 * Z[:, :1])
    y = 0.5 + X @ (rng.normal(size=p) * (rng.random(p) < 0.6)) + rng.normal(size=n)
    w = normalize_weights(rng.uniform(0.2, 3.0, size=n))
    return X, y, w


def _kkt(X, y, w, coefs, cfg, P):
    n = X.shape[0]
    beta = coefs.slopes
    r = y - coefs.intercept - X @ beta
    grad = -2 * X.T @ (w * r) / n
    thresh = np.full(beta.shape, cfg.lambda1)
    if cfg.method == "elastic_net":
        grad = grad + cfg.lambda2 * beta
    elif cfg.method == "ulasso":
        grad = grad + 2 * cfg.lambda2 * P @ beta
    elif cfg.method == "iilasso":
        thresh = thresh + 2 * cfg.lambda2 * P @ np.abs(beta)
    viol = np.where(beta != 0, np.abs(grad + thresh * np.sign(beta)),
                    np.maximum(np.abs(grad) - thresh, 0))
    return max(float(viol.max()), abs(float(np.sum(w * r) / n)))


def criterion_5():
    rng = make_rng(5)
    # (a) closed form vs coordinate descent
    diff = 0.0
    for _ in range(100):
        X, y, w = _random_problem(rng, int(rng.integers(30, 200)), int(rng.integers(1, 8)))
        a = fit_wls(X, y, w)
        b = fit_coordinate_descent(X, y, w, EstimatorConfig("ols", tolerance=1e-12,
                                                            max_iterations=100_000))
        diff = max(diff, float(np.abs(a.slopes - b.slopes).max()),
                   abs(a.intercept - b.intercept))
    ok_a = report("5a", diff < 1e-6, f"max |WLS - CD| over 100 instances {diff:.2e} "
                  "(need < 1e-6)")
    # (b) orthogonal design: lasso = soft threshold of WLS at lambda1/2 (unhalved loss)
    dev = 0.0
    for _ in range(20):
        n, p = 150, 5
        w = normalize_weights(rng.uniform(0.5, 2.0, size=n))
        A = rng.normal(size=(n, p))
        A -= (w @ A) / w.sum()
        G = (A * w[:, None]).T @ A / n
        X = A @ np.linalg.inv(np.linalg.cholesky(G)).T
        y = X @ rng.normal(size=p) + 0.3 * rng.normal(size=n)
        ols = fit_wls(X, y, w).slopes
        for l1 in (0.05, 0.3, 1.0):
            fit = fit_coordinate_descent(X, y, w, EstimatorConfig("lasso", l1, tolerance=1e-14))
            target = np.sign(ols) * np.maximum(np.abs(ols) - l1 / 2, 0)
            dev = max(dev, float(np.abs(fit.slopes - target).max()))
    ok_b = report("5b", dev < 1e-8, f"max deviation from soft-threshold closed form "
                  f"{dev:.2e} (need < 1e-8)")
    # (c) KKT residuals
    worst, count = 0.0, 0
    for method in ("lasso", "elastic_net", "ulasso", "iilasso"):
        for _ in range(25):
            X, y, w = _random_problem(rng, 200, 10)
            l2 = {"lasso": 0.0, "ulasso": float(rng.uniform(0, 0.1))}.get(
                method, float(rng.uniform(0, 0.5)))
            cfg = EstimatorConfig(method, float(rng.uniform(0.005, 0.3)), l2, tolerance=1e-10)
            P = build_penalty_matrix(X, method).values if method in ("ulasso", "iilasso") \
                else None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                fit = fit_coordinate_descent(X, y, w, cfg)
            if fit.converged:
                count += 1
                worst = max(worst, _kkt(X, y, w, fit.coefficients, cfg, P))
    ok_c = report("5c", worst < 1e-5 and count > 0,
                  f"max KKT residual {worst:.2e} over {count} converged fits (need < 1e-5)")
    # (d) logistic derivatives vs central differences
    rel = 0.0
    h = 1e-5
    for _ in range(30):
        n, p = 80, 4
        A = np.column_stack([np.ones(n), rng.normal(size=(n, p))])
        yy = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        w = normalize_weights(rng.uniform(0.1, 2, size=n))
        theta = rng.normal(size=p + 1)
        l2 = float(rng.uniform(0, 0.3))
        _, g, H = logistic_objective(theta, A, yy, w, l2)
        g_fd, H_fd = np.zeros_like(g), np.zeros_like(H)
        for k in range(p + 1):
            e = np.zeros(p + 1)
            e[k] = h
            fp, gp, _ = logistic_objective(theta + e, A, yy, w, l2)
            fm, gm, _ = logistic_objective(theta - e, A, yy, w, l2)
            g_fd[k] = (fp - fm) / (2 * h)
            H_fd[:, k] = (gp - gm) / (2 * h)
        rel = max(rel, np.linalg.norm(g - g_fd) / max(np.linalg.norm(g), 1e-12),
                  np.linalg.norm(H - H_fd) / np.linalg.norm(H))
    ok_d = report("5d", rel < 1e-5, f"max relative finite-difference error {rel:.2e} "
                  "(need < 1e-5)")
    return ok_a and ok_b and ok_c and ok_d


# --------------------------------------------------------------------------
# 6. metric oracles

def criterion_6():
    rng = make_rng(6)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 501))
        labels = np.where(rng.random(n) < rng.uniform(0.1, 0.9), 1, -1)
        if labels.min() == labels.max():
            labels[0] = -labels[0]
        scores = rng.integers(0, int(rng.integers(2, 30)), size=n).astype(float)
        pos, neg = scores[labels == 1], scores[labels == -1]
        diff = pos[:, None] - neg[None, :]
        brute = (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (pos.size * neg.size)
        mismatches += auc(scores, labels) != brute
    ok_auc = report("6a", mismatches == 0,
                    f"AUC vs pairwise count: {mismatches} mismatches in 1000 instances "
                    "(need exact equality)")
    truth = Coefficients(0.0, [0.2, -0.4, 0.6, -0.8, 1.0, -0.2, 0.4, -0.6, 0.8, -1.0])
    off = truth.slopes.copy()
    off[4] += 0.5  # 1.0 -> 1.5, exactly representable
    pairs = [
        (rmse([1.0, 2.0], [1.0, 2.0]), 0.0),
        (rmse([0, 0], [1, 1]), 1.0),
        (rmse([0, 2], [0, 0]), np.sqrt(2.0)),
        (beta_error(truth, truth), 0.0),
        (beta_error(np.zeros(10), truth), 6.0),
        (beta_error(off, truth), 0.5),
        (auc([0.1, 0.4, 0.35, 0.8], [-1, -1, 1, 1]), 0.75),
    ]
    exact = sum(a == b for a, b in pairs)
    ok_hand = report("6b", exact == len(pairs),
                     f"{exact}/{len(pairs)} hand examples equal (need exact equality)")
    return ok_auc and ok_hand


# --------------------------------------------------------------------------
# 7. density-ratio sanity

def criterion_7():
    rho = 0.9
    S = np.array([[1.0, rho], [rho, 1.0]])
    X = sample_design(10_000, S, make_rng(7))
    Xt = column_shuffle(X, 1, 8)
    analytic = 0.5 * np.einsum("ij,jk,ik->i", X, np.linalg.inv(S) - np.eye(2), X) \
        + 0.5 * np.log(np.linalg.det(S))
    r = {}
    for quad in (False, True):
        model = fit_density_ratio(X, Xt, SrdoConfig(quadratic=quad))
        r[quad] = float(np.corrcoef(model.log_ratio(X), analytic)[0, 1])
    ok_lin = report("7a", r[False] > 0.8,
                    f"linear-logit log-weights vs analytic log-ratio r = {r[False]:.3f} "
                    "(need > 0.8)")
    ok_quad = report("7b", r[True] > 0.95,
                     f"quadratic-feature log-weights vs analytic log-ratio r = {r[True]:.4f} "
                     "(need > 0.95)")
    return ok_lin and ok_quad


# --------------------------------------------------------------------------
# 8. determinism of every subcommand

def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file()}


def criterion_8():
    config = ("[experiment]\nseed = 8\nrepetitions = 2\nmethods = ols, lasso, srdo+ols\n"
              "[simulation]\nn = 400\n")
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        (root / "exp.ini").write_text(config)
        outs = []
        for tag in ("a", "b"):
            d = root / tag
            codes = [
                cli_main(["simulate", "--seed", "7", "--out", str(d / "sim")]),
                cli_main(["reweight", "--data", str(root / "a" / "sim" / "train.csv"),
                          "--seed", "3", "--out", str(d / "rw")]),
                cli_main(["fit", "--data", str(root / "a" / "sim" / "train.csv"),
                          "--weights", str(root / "a" / "rw" / "weights.csv"),
                          "--method", "lasso", "--lambda1", "0.01", "--out", str(d / "m.json")]),
                cli_main(["evaluate", "--model", str(root / "a" / "m.json"), "--data",
                          str(root / "a" / "sim" / "test_01.csv"),
                          str(root / "a" / "sim" / "test_05.csv"), "--out", str(d / "ev")]),
                cli_main(["experiment", "--config", str(root / "exp.ini"),
                          "--out", str(d / "exp")]),
            ]
            outs.append((codes, _tree(d)))
        (ca, ta), (cb, tb) = outs
        ok = ca == cb == [0] * 5 and ta == tb
        n_files = len(ta)
    return report("8", ok, f"{n_files} files from simulate/reweight/fit/evaluate/experiment "
                  f"byte-identical across reruns: {ta == tb}; exit codes {ca}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 9)])
def test_criterion(criterion):
    assert criterion()


if __name__ == "__main__":
    outcomes = [c() for c in CRITERIA]
    sys.exit(0 if all(outcomes) else 1)
