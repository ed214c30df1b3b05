"""Command-line interface.

Subcommands::

    srdo simulate   --seed 7 --out sim/            [--config exp.ini]
    srdo reweight   --data train.csv --out rw/     [--config exp.ini] [--seed S]
    srdo fit        --data train.csv --method ols --out model.json [--weights w.csv]
    srdo evaluate   --model model.json --data a.csv b.csv --out ev/
    srdo experiment --config exp.ini --out results/ [--jobs N]
    srdo version

Exit status is 0 on success, 1 on usage or configuration errors and 2 on
data or convergence errors. Every file is written to a temporary name in
the target directory and renamed into place. Command-line flags take
precedence over config-file values, which take precedence over defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, parse_config, render_resolved
from .core import Coefficients, LabeledDataset, check_weights, standardize
from .decorrelate import srdo
from .estimators import METHODS, OBJECTIVE_CONVENTION, EstimatorConfig, fit_config
from .evaluation import (
    ExperimentSpec,
    evaluate_suite,
    fit_methods,
    repetition_harness,
)
from .exceptions import ConfigError, ConvergenceWarning, SRDOError
from .ingest import load_csv, split_environments
from .simgen import generate_environment_suite

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so usage errors map to exit status 1."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# --------------------------------------------------------------------------
# output helpers

def _clean(obj):
    """Replace NaN/inf by None and numpy scalars/arrays by plain Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and :func:`os.replace`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ""
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _provenance(resolved=None):
    d = {"version": __version__, "objective_convention": OBJECTIVE_CONVENTION}
    if resolved is not None:
        d["config"] = resolved
    return d


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    overrides = {"experiment.seed": args.seed}
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        if args.seed is None:
            raise ConfigError("a seed is required: pass --seed or a config with one",
                              field="experiment.seed")
        cfg = parse_config("[experiment]\n", overrides)
    if cfg.simulation is None:
        raise ConfigError("the config has no [simulation] section", field="simulation")
    suite = generate_environment_suite(cfg.simulation, cfg.rho_test)
    out = Path(args.out)
    p = cfg.simulation.spec.p
    header = [f"x{j + 1}" for j in range(p)] + ["y"]
    envs = []
    for k, ds in enumerate(suite.all()):
        name = "train.csv" if k == 0 else f"test_{k:02d}.csv"
        rows = np.column_stack([ds.X, ds.y]).tolist()
        write_atomic(out / name, csv_text(header, rows))
        envs.append({
            "file": name,
            "tag": ds.environment_tag,
            "rho": ds.meta["rho"],
            "v": ds.meta["v"],
            "gamma2": ds.meta["gamma2"],
            "max_abs_bias": ds.meta["max_abs_bias"],
            "n": ds.n,
        })
    sidecar = {
        "seed": cfg.seed,
        "simulation": cfg.simulation.to_dict(),
        "environments": envs,
        **_provenance(cfg.resolved),
    }
    write_atomic(out / "simulation.json", dumps_json(sidecar))
    return EXIT_OK


def _read_features(path, target, exclude=()):
    """Features of a CSV, dropping ``target`` when the file has that column."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    return load_csv(path, target if target in header else None, exclude=exclude)


def cmd_reweight(args):
    overrides = {"experiment.seed": args.seed}
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        if args.seed is None:
            raise ConfigError("a seed is required: pass --seed or a config with one",
                              field="experiment.seed")
        cfg = parse_config("[experiment]\n", overrides)
    table = _read_features(args.data, args.target, tuple(args.exclude or ()))
    Xs, record = standardize(table.features, column_names=list(table.feature_names))
    res = srdo(Xs, cfg.srdo)
    out = Path(args.out)
    write_atomic(out / "weights.csv", csv_text(["weight"], [[w] for w in res.weights.values]))
    report = {
        "data": str(args.data),
        "features": list(table.feature_names),
        "standardization": record.to_dict(),
        "srdo": cfg.srdo.to_dict(),
        **res.to_dict(),
        **_provenance(cfg.resolved),
    }
    write_atomic(out / "diagnostics.json", dumps_json(report))
    return EXIT_OK


def _read_weights(path, n):
    table = load_csv(path, None)
    if "weight" in table.feature_names:
        w = table.features[:, table.feature_names.index("weight")]
    elif table.features.shape[1] == 1:
        w = table.features[:, 0]
    else:
        raise SRDOError(f"{path}: expected a single 'weight' column")
    return check_weights(w / w.mean() if w.mean() > 0 else w, n)


def cmd_fit(args):
    task = "binary" if args.method == "logistic" else "regression"
    table = load_csv(args.data, args.target, task=task, exclude=tuple(args.exclude or ()))
    w = _read_weights(args.weights, table.n) if args.weights else np.ones(table.n)
    config = EstimatorConfig(args.method, args.lambda1, args.lambda2,
                             max_iterations=args.max_iter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        fit = fit_config(table.features, table.target, w, config)
    model = {
        "method": args.method,
        "features": list(table.feature_names),
        "target": args.target,
        "intercept": fit.coefficients.intercept,
        "slopes": fit.coefficients.slopes,
        "lambdas": {"lambda1": args.lambda1, "lambda2": args.lambda2},
        "converged": fit.converged,
        "n_iter": fit.n_iter,
        "objective": fit.objective,
        "convention": OBJECTIVE_CONVENTION,
        "data": str(args.data),
        "weights": None if args.weights is None else str(args.weights),
        "label_mapping": table.label_mapping,
        "version": __version__,
    }
    write_atomic(args.out, dumps_json(model))
    if not fit.converged:
        print(f"srdo fit: {args.method} did not converge in {fit.n_iter} iterations "
              "(coefficients written, flagged)", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_evaluate(args):
    try:
        model = json.loads(Path(args.model).read_text(encoding="utf-8"))
        coefs = Coefficients(model["intercept"], np.asarray(model["slopes"], dtype=float))
        features = model.get("features")
        target = model.get("target", "y")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SRDOError(f"cannot read model {args.model}: {exc}") from None
    metric = args.metric or ("auc" if model.get("method") == "logistic" else "rmse")
    task = "binary" if metric == "auc" else "regression"
    suite = []
    for path in args.data:
        t = load_csv(path, target, task=task)
        if features is not None and list(t.feature_names) != list(features):
            raise SRDOError(f"{path}: columns {list(t.feature_names)} do not match the "
                            f"model's features {features}")
        suite.append(LabeledDataset(t.features, t.target, str(path), t.feature_names))
    report = evaluate_suite(coefs, suite, metric)
    out = Path(args.out)
    doc = {"model": str(args.model), **report.to_dict(), **_provenance()}
    write_atomic(out / "report.json", dumps_json(doc))
    rows = [[model.get("method", ""), tag, 0, metric, v] for tag, v in report.per_environment]
    write_atomic(out / "runs.csv",
                 csv_text(["method", "environment", "repetition", "metric", "value"], rows))
    return EXIT_OK


def _csv_route(cfg):
    src = cfg.data
    table = load_csv(src.path, src.target, src.split.environment_column, cfg.task,
                     src.exclude, src.keep_environment_feature)
    envs = split_environments(table, src.split, log_target=src.log_target)
    train = envs[src.split.train_bin_index]

    def runner(seed, r, keep_weights):
        return fit_methods(train, envs, cfg.methods, cfg.srdo, seed, r, k_folds=cfg.k_folds,
                           metric=cfg.metric, keep_weights=keep_weights)

    info = {
        "environments": [{"tag": d.environment_tag, "n": d.n, "train": d.meta["train"]}
                         for d in envs],
        "features": list(table.feature_names),
        "standardization": train.meta.get("standardization"),
        "label_mapping": table.label_mapping,
    }
    return runner, info


def cmd_experiment(args):
    cfg = load_config(args.config, {"experiment.jobs": args.jobs})
    if not (args.out or cfg.output):
        raise ConfigError("no output directory: pass --out or set experiment.output",
                          field="experiment.output")
    out = Path(args.out or cfg.output)
    spec = ExperimentSpec(cfg.simulation, cfg.rho_test, cfg.methods, cfg.srdo,
                          cfg.k_folds, cfg.metric)
    runner, info = (None, {}) if cfg.data is None else _csv_route(cfg)
    summary, runs = repetition_harness(spec, cfg.repetitions, cfg.seed, cfg.jobs,
                                       keep_weights=True, runner=runner)
    report = {
        "methods": {name: rep.to_dict() for name, rep in summary.items()},
        "repetitions": cfg.repetitions,
        "failed_runs": [{"repetition": r["repetition"], "error": r["error"]}
                        for r in runs if "error" in r],
        "route": "simulation" if cfg.data is None else "csv",
        **info,
        **_provenance(cfg.resolved),
    }
    rows = []
    for run in runs:
        if "error" in run:
            continue
        for rec in run["records"]:
            for tag, value in rec["per_environment"]:
                rows.append([rec["repetition"], rec["method"], tag, cfg.metric, value,
                             rec["beta_error"], rec["train_metric"], rec["lambda1"],
                             rec["lambda2"], rec["converged"]])
        if run.get("weights") is not None:
            write_atomic(out / "weights" / f"rep_{run['repetition']:03d}.csv",
                         csv_text(["weight"], [[w] for w in run["weights"]]))
    write_atomic(out / "runs.csv", csv_text(
        ["repetition", "method", "environment", "metric", "value", "beta_error",
         "train_metric", "lambda1", "lambda2", "converged"], rows))
    write_atomic(out / "report.json", dumps_json(report))
    write_atomic(out / "config.resolved.ini",
                 f"# srdo {__version__}\n" + render_resolved(cfg.resolved))
    return EXIT_OK


def cmd_version(args):
    print(f"srdo {__version__}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="srdo", description="Decorrelating sample reweighting "
                     "for stable linear prediction under distribution shift.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="write block-covariance environments as CSV")
    p.add_argument("--config", help="INI config with a [simulation] section")
    p.add_argument("--seed", type=int, help="overrides experiment.seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reweight", help="learn decorrelating weights for a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="INI config; only [srdo] and the seed are used")
    p.add_argument("--seed", type=int, help="overrides experiment.seed")
    p.add_argument("--target", default="y", help="column left out of the features if present")
    p.add_argument("--exclude", nargs="*", help="further columns to leave out")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_reweight)

    p = sub.add_parser("fit", help="fit one linear or logistic model")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", help="CSV with a 'weight' column")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--max-iter", type=int, default=10000, dest="max_iter")
    p.add_argument("--target", default="y")
    p.add_argument("--exclude", nargs="*")
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a fitted model on several CSVs")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, nargs="+")
    p.add_argument("--metric", choices=("rmse", "auc"))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="repeated train/reweight/fit/evaluate runs")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, help="parallel repetitions (overrides experiment.jobs)")
    p.add_argument("--out", help="output directory (overrides experiment.output)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("version", help="print the library version")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None):
    """Run the CLI and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", None) is not None and args.jobs < 1:
            parser.error("--jobs must be at least 1")
        return args.func(args)
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"srdo: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SRDOError as exc:
        print(f"srdo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"srdo: {exc}", file=sys.stderr)
        return EXIT_DATA


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
