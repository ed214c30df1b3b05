"""Experiment configuration files.

Plain-text INI with one level of sections::

    [experiment]
    task = regression
    seed = 7
    repetitions = 30
    methods = ols, lasso, elastic_net, srdo+ols

    [simulation]
    n = 1000
    p = 10
    block_size = 2
    rho_train = 0.9
    rho_test = -0.9, -0.5, 0, 0.5, 0.9

    [srdo]
    clip_hi = 20

    [grid.lasso]
    lambda1 = 0, 0.001, 0.01

A ``[data]`` section (CSV path plus environment split) replaces
``[simulation]`` for real datasets. Every omitted key takes the default
listed in :data:`DEFAULTS`; the resolved values are echoed into reports.
Command-line flags override file values.
"""

from __future__ import annotations

import configparser
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Coefficients
from .decorrelate import SrdoConfig
from .estimators import METHODS
from .evaluation import MethodSpec
from .exceptions import ConfigError, SRDOError
from .ingest import EnvironmentSplit
from .simgen import REFERENCE_SLOPES, CovarianceSpec, SimulationConfig, rho_bounds

DEFAULT_RHO_TEST = (-0.9, -0.5, 0.0, 0.5, 0.9)

DEFAULTS = {
    "experiment": {
        "task": "regression",
        "repetitions": "30",
        "methods": "ols, lasso, elastic_net, ulasso, iilasso, srdo+ols",
        "k_folds": "5",
        "metric": "",
        "jobs": "1",
        "output": "",
    },
    "simulation": {
        "n": "1000",
        "p": "10",
        "block_size": "2",
        "rho_train": "0.9",
        "rho_per_block": "",
        "rho_test": ", ".join(f"{r:g}" for r in DEFAULT_RHO_TEST),
        "beta": ", ".join(f"{b:g}" for b in REFERENCE_SLOPES),
        "intercept": "0",
        "noise_std": "1",
        "reuse_train_v": "false",
    },
    "data": {
        "path": "",
        "target": "y",
        "environment_column": "",
        "bin_edges": "",
        "train_bin": "0",
        "log_target": "false",
        "exclude": "",
        "keep_environment_feature": "true",
    },
    "srdo": {
        "clip_lo": "0.05",
        "clip_hi": "20",
        "regularization": "1e-4",
        "max_iterations": "500",
        "replicas": "1",
        "quadratic": "true",
        "confidence_threshold": "0.05",
    },
}


@dataclass
class DataSource:
    path: Path
    target: str
    split: EnvironmentSplit
    log_target: bool = False
    exclude: tuple = ()
    keep_environment_feature: bool = True


@dataclass
class ExperimentConfig:
    task: str
    seed: int
    repetitions: int
    methods: tuple
    srdo: SrdoConfig
    k_folds: int = 5
    metric: str = "rmse"
    jobs: int = 1
    output: str = ""
    simulation: SimulationConfig | None = None
    rho_test: tuple = ()
    data: DataSource | None = None
    resolved: dict = field(default_factory=dict)
    source_text: str = ""


class _LineIndex:
    """Maps (section, key) to the line it was defined on."""

    def __init__(self, text):
        self.lines = {}
        section = None
        for i, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line[0] in "#;":
                continue
            m = re.match(r"\[(.+)\]$", line)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = i
                continue
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            self.lines[(section, key)] = i

    def __call__(self, section, key=None):
        return self.lines.get((section, key), self.lines.get((section, None)))


class _Reader:
    def __init__(self, parser, index):
        self.parser = parser
        self.index = index
        self.resolved = {}

    def raw(self, section, key):
        if self.parser.has_option(section, key):
            value = self.parser.get(section, key)
        else:
            value = DEFAULTS.get(section, {}).get(key, "")
        self.resolved.setdefault(section, {})[key] = value
        return value

    def _fail(self, section, key, msg):
        raise ConfigError(msg, line=self.index(section, key), field=f"{section}.{key}")

    def str(self, section, key):
        return self.raw(section, key).strip()

    def int(self, section, key, minimum=None):
        text = self.str(section, key)
        try:
            value = int(text)
        except ValueError:
            self._fail(section, key, f"expected an integer, got {text!r}")
        if minimum is not None and value < minimum:
            self._fail(section, key, f"must be >= {minimum}, got {value}")
        return value

    def float(self, section, key):
        text = self.str(section, key)
        try:
            return float(text)
        except ValueError:
            self._fail(section, key, f"expected a number, got {text!r}")

    def floats(self, section, key):
        text = self.str(section, key)
        if not text:
            return ()
        try:
            return tuple(float(t) for t in re.split(r"[,\s]+", text) if t)
        except ValueError:
            self._fail(section, key, f"expected a list of numbers, got {text!r}")

    def names(self, section, key):
        return tuple(t.strip() for t in self.str(section, key).split(",") if t.strip())

    def bool(self, section, key):
        text = self.str(section, key).lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        self._fail(section, key, f"expected true/false, got {text!r}")


def parse_config(text, overrides=None, base_dir="."):
    """Parse and validate configuration text.

    ``overrides`` maps ``"section.key"`` to string values that take
    precedence over the file (used for command-line flags).
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None
    index = _LineIndex(text)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    known = set(DEFAULTS)
    for section in parser.sections():
        if section not in known and not section.startswith("grid."):
            raise ConfigError(f"unknown section [{section}]", line=index(section))
        if section in DEFAULTS:
            for key in parser.options(section):
                if key not in DEFAULTS[section] and key != "seed":
                    raise ConfigError(f"unknown key {key!r}", line=index(section, key),
                                      field=f"{section}.{key}")
    r = _Reader(parser, index)

    if not parser.has_option("experiment", "seed"):
        raise ConfigError("a seed is required (no implicit randomness)",
                          line=index("experiment"), field="experiment.seed")
    seed = r.int("experiment", "seed", minimum=0)
    r.resolved["experiment"]["seed"] = str(seed)
    task = r.str("experiment", "task")
    if task not in ("regression", "binary"):
        r._fail("experiment", "task", f"task must be regression or binary, got {task!r}")
    metric = r.str("experiment", "metric") or ("auc" if task == "binary" else "rmse")
    if metric not in ("rmse", "auc"):
        r._fail("experiment", "metric", f"metric must be rmse or auc, got {metric!r}")
    r.resolved["experiment"]["metric"] = metric

    method_names = r.names("experiment", "methods")
    if task == "binary":
        if not parser.has_option("experiment", "methods"):
            method_names = ("logistic", "srdo+logistic")
            r.resolved["experiment"]["methods"] = ", ".join(method_names)
    if not method_names:
        r._fail("experiment", "methods", "at least one method is required")
    methods = []
    for name in method_names:
        base = name.split("+", 1)[1] if name.startswith("srdo+") else name
        if base not in METHODS:
            r._fail("experiment", "methods", f"unknown method {name!r}")
        if (base == "logistic") != (task == "binary"):
            r._fail("experiment", "methods", f"method {name!r} does not fit task {task!r}")
        section = f"grid.{name}" if parser.has_section(f"grid.{name}") else f"grid.{base}"
        grid = None
        if parser.has_section(section):
            l1 = r.floats(section, "lambda1") or (0.0,)
            l2 = r.floats(section, "lambda2") or (0.0,)
            if any(v < 0 for v in l1 + l2):
                r._fail(section, "lambda1", "penalty strengths must be nonnegative")
            grid = list(itertools.product(l1, l2))
        methods.append(MethodSpec.parse(name, grid))

    try:
        srdo_cfg = SrdoConfig(
            weight_clip=(r.float("srdo", "clip_lo"), r.float("srdo", "clip_hi")),
            classifier_regularization=r.float("srdo", "regularization"),
            classifier_max_iterations=r.int("srdo", "max_iterations", minimum=1),
            resample_replicas=r.int("srdo", "replicas", minimum=1),
            quadratic=r.bool("srdo", "quadratic"),
            confidence_threshold=r.float("srdo", "confidence_threshold"),
            seed=seed,
        )
    except ConfigError:
        raise
    except SRDOError as exc:
        raise ConfigError(str(exc), line=index("srdo"), field="srdo") from None

    cfg = ExperimentConfig(
        task=task,
        seed=seed,
        repetitions=r.int("experiment", "repetitions", minimum=1),
        methods=tuple(methods),
        srdo=srdo_cfg,
        k_folds=r.int("experiment", "k_folds", minimum=2),
        metric=metric,
        jobs=r.int("experiment", "jobs", minimum=1),
        output=r.str("experiment", "output"),
        source_text=text,
    )

    if parser.has_section("data"):
        cfg.data = _data_source(r, base_dir)
        if parser.has_section("simulation"):
            raise ConfigError("give either [simulation] or [data], not both",
                              line=index("data"))
    else:
        if task != "regression":
            raise ConfigError("simulation supports the regression task only",
                              line=index("experiment", "task"), field="experiment.task")
        cfg.simulation, cfg.rho_test = _simulation(r, seed)

    for m in cfg.methods:
        r.resolved.setdefault("grids", {})[m.name] = [list(g) for g in m.resolved_grid()]
    cfg.resolved = r.resolved
    return cfg


def _simulation(r, seed):
    n = r.int("simulation", "n", minimum=2)
    p = r.int("simulation", "p", minimum=1)
    s = r.int("simulation", "block_size", minimum=1)
    if p % s:
        r._fail("simulation", "block_size", f"p={p} is not divisible by block_size={s}")
    lo, hi = rho_bounds(s)
    rho = r.floats("simulation", "rho_per_block") or (r.float("simulation", "rho_train"),)
    for v in rho:
        if not lo < v < hi:
            r._fail("simulation", "rho_train",
                    f"rho={v} violates the block positive-definiteness rule "
                    f"{lo:.6g} < rho < {hi:.6g} for block size {s}")
    rho_test = r.floats("simulation", "rho_test")
    for v in rho_test:
        if not lo < v < hi:
            r._fail("simulation", "rho_test",
                    f"test rho={v} violates the block positive-definiteness rule "
                    f"{lo:.6g} < rho < {hi:.6g} for block size {s}")
    beta = r.floats("simulation", "beta")
    if len(beta) != p:
        if not r.parser.has_option("simulation", "beta") and p <= len(REFERENCE_SLOPES):
            beta = REFERENCE_SLOPES[:p]
            r.resolved["simulation"]["beta"] = ", ".join(f"{b:g}" for b in beta)
        else:
            r._fail("simulation", "beta", f"need {p} slopes, got {len(beta)}")
    noise = r.float("simulation", "noise_std")
    if not noise > 0:
        r._fail("simulation", "noise_std", "noise_std must be positive")
    try:
        spec = CovarianceSpec(p, s, rho)
    except SRDOError as exc:
        r._fail("simulation", "rho_train", str(exc))
    sim = SimulationConfig(
        n=n, spec=spec,
        beta_true=Coefficients(r.float("simulation", "intercept"), np.asarray(beta)),
        noise_std=noise, seed=seed,
        reuse_train_v=r.bool("simulation", "reuse_train_v"),
    )
    return sim, rho_test


def _data_source(r, base_dir):
    path = r.str("data", "path")
    if not path:
        r._fail("data", "path", "path is required")
    env = r.str("data", "environment_column")
    if not env:
        r._fail("data", "environment_column", "environment_column is required")
    edges = r.floats("data", "bin_edges")
    try:
        split = EnvironmentSplit(env, edges, r.int("data", "train_bin", minimum=0))
    except SRDOError as exc:
        r._fail("data", "bin_edges", str(exc))
    p = Path(path)
    if not p.is_absolute():
        p = Path(base_dir) / p
    return DataSource(p, r.str("data", "target"), split, r.bool("data", "log_target"),
                      r.names("data", "exclude"), r.bool("data", "keep_environment_feature"))


def load_config(path, overrides=None):
    """Read and validate a config file; see :func:`parse_config`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, overrides, base_dir=path.parent)


def render_resolved(resolved):
    """INI text of the fully resolved configuration (defaults filled in)."""
    out = []
    for section in sorted(resolved):
        if section == "grids":
            continue
        out.append(f"[{section}]")
        for key in sorted(resolved[section]):
            out.append(f"{key} = {resolved[section][key]}")
        out.append("")
    return "\n".join(out)
