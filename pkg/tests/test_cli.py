import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from srdo import __version__
from srdo.cli import main
from srdo.config import DEFAULTS, load_config, parse_config
from srdo.exceptions import ConfigError

SMALL_EXPERIMENT = """\
[experiment]
seed = 11
repetitions = 2
methods = ols, lasso, srdo+ols

[simulation]
n = 300
rho_test = -0.5, 0.5

[grid.lasso]
lambda1 = 0, 0.01
"""


def read_bytes(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes()
            for p in sorted(directory.rglob("*")) if p.is_file()}


class TestConfig:
    def test_minimal_defaults_filled(self):
        cfg = parse_config("[experiment]\nseed = 1\nmethods = ols\n")
        assert cfg.repetitions == 30 and cfg.k_folds == 5 and cfg.metric == "rmse"
        assert cfg.simulation.n == 1000 and cfg.simulation.spec.rho_per_block[0] == 0.9
        assert cfg.rho_test == (-0.9, -0.5, 0.0, 0.5, 0.9)
        assert cfg.srdo.weight_clip == (0.05, 20.0)
        for section, keys in DEFAULTS.items():
            if section in ("experiment", "simulation", "srdo"):
                assert set(keys) <= set(cfg.resolved[section])

    def test_minimal_data_route(self, tmp_path):
        (tmp_path / "d.csv").write_text("year,x,y\n1,0,1\n")
        path = tmp_path / "c.ini"
        path.write_text("[experiment]\nseed = 2\nmethods = ols\n"
                        "[data]\npath = d.csv\nenvironment_column = year\nbin_edges = 0, 5\n")
        cfg = load_config(path)
        assert cfg.data.path == tmp_path / "d.csv"
        assert cfg.simulation is None and cfg.data.target == "y"

    def test_missing_seed(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config("[experiment]\nmethods = ols\n")

    def test_rho_outside_pd_range(self):
        with pytest.raises(ConfigError) as err:
            parse_config("[experiment]\nseed = 1\n\n[simulation]\nblock_size = 5\n"
                         "rho_train = -0.3\n")
        assert err.value.line == 6
        assert err.value.field == "simulation.rho_train"
        assert "positive-definiteness" in str(err.value)

    def test_bad_values_report_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config("[experiment]\nseed = 1\nrepetitions = many\n")
        assert err.value.line == 3
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nseed = 1\nmethods = ridge\n")
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nseed = 1\n[bogus]\n")
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nseed = 1\ncolour = red\n")

    def test_override_precedence(self):
        cfg = parse_config("[experiment]\nseed = 1\njobs = 3\n", {"experiment.jobs": 2})
        assert cfg.jobs == 2
        cfg = parse_config("[experiment]\nseed = 1\njobs = 3\n", {"experiment.jobs": None})
        assert cfg.jobs == 3

    def test_grid_section(self):
        cfg = parse_config(SMALL_EXPERIMENT)
        lasso = [m for m in cfg.methods if m.name == "lasso"][0]
        assert lasso.resolved_grid() == ((0.0, 0.0), (0.01, 0.0))


class TestExitCodes:
    def test_unknown_flag(self, tmp_path, capsys):
        assert main(["simulate", "--seed", "1", "--out", str(tmp_path), "--bogus"]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_no_subcommand(self, capsys):
        assert main([]) == 1

    def test_missing_seed(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path)]) == 1
        assert "seed" in capsys.readouterr().err

    def test_data_error(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("a,y\n1,2\nx,3\n")
        assert main(["fit", "--data", str(data), "--method", "ols",
                     "--out", str(tmp_path / "m.json")]) == 2
        assert "NonNumericCell" in capsys.readouterr().err
        assert not (tmp_path / "m.json").exists()

    def test_missing_file(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--method", "ols",
                     "--out", str(tmp_path / "m.json")]) == 2

    def test_nonconvergence(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        rng = np.random.default_rng(0)
        X = rng.normal(size=(100, 3))
        X[:, 1] = X[:, 0] + 0.01 * rng.normal(size=100)
        y = X @ [1.0, 1.0, 0.5] + rng.normal(size=100)
        data.write_text("a,b,c,y\n" + "\n".join(",".join(f"{v:.17g}" for v in r)
                                              for r in np.column_stack([X, y])) + "\n")
        code = main(["fit", "--data", str(data), "--method", "lasso", "--lambda1", "1e-4",
                     "--max-iter", "2", "--out", str(tmp_path / "m.json")])
        assert code == 2
        model = json.loads((tmp_path / "m.json").read_text())
        assert model["converged"] is False

    def test_version(self, capsys):
        assert main(["version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "srdo", "version"], capture_output=True,
                             text=True, check=False)
        assert out.returncode == 0 and __version__ in out.stdout
        out = subprocess.run([sys.executable, "-m", "srdo", "fit"], capture_output=True,
                             text=True, check=False)
        assert out.returncode == 1 and "usage" in out.stderr


class TestPipeline:
    def test_simulate_files(self, tmp_path):
        assert main(["simulate", "--seed", "7", "--out", str(tmp_path)]) == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["simulation.json", "test_01.csv", "test_02.csv", "test_03.csv",
                         "test_04.csv", "test_05.csv", "train.csv"]
        with open(tmp_path / "train.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [f"x{j}" for j in range(1, 11)] + ["y"]
        assert len(rows) == 1001
        side = json.loads((tmp_path / "simulation.json").read_text())
        assert side["seed"] == 7 and side["version"] == __version__
        assert len(side["environments"]) == 6
        env = side["environments"][0]
        assert len(env["v"]) == 10 and env["gamma2"] > 0

    def test_simulate_with_config(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[experiment]\nseed = 3\n[simulation]\nn = 50\np = 4\nrho_test = 0\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert sorted(p.name for p in (tmp_path / "o").iterdir()) == [
            "simulation.json", "test_01.csv", "train.csv"]
        # --seed overrides the file
        assert main(["simulate", "--config", str(cfg), "--seed", "4",
                     "--out", str(tmp_path / "p")]) == 0
        assert (tmp_path / "o" / "train.csv").read_bytes() != \
            (tmp_path / "p" / "train.csv").read_bytes()

    def test_chain(self, tmp_path):
        sim, rw = tmp_path / "sim", tmp_path / "rw"
        assert main(["simulate", "--seed", "5", "--out", str(sim)]) == 0
        assert main(["reweight", "--data", str(sim / "train.csv"), "--seed", "1",
                     "--out", str(rw)]) == 0
        diag = json.loads((rw / "diagnostics.json").read_text())
        assert diag["after"]["smallest_eigenvalue"] > diag["before"]["smallest_eigenvalue"]
        assert diag["features"] == [f"x{j}" for j in range(1, 11)]
        w = np.loadtxt(rw / "weights.csv", skiprows=1, delimiter=",")
        assert w.shape == (1000,) and abs(w.mean() - 1) < 1e-9

        model_path = tmp_path / "model.json"
        assert main(["fit", "--data", str(sim / "train.csv"), "--weights", str(rw / "weights.csv"),
                     "--method", "ols", "--out", str(model_path)]) == 0
        model = json.loads(model_path.read_text())
        assert set(model) >= {"intercept", "slopes", "method", "lambdas", "converged",
                              "objective", "convention"}
        assert len(model["slopes"]) == 10

        tests = sorted(str(p) for p in sim.glob("test_*.csv"))
        assert main(["evaluate", "--model", str(model_path), "--data", *tests,
                     "--out", str(tmp_path / "ev")]) == 0
        report = json.loads((tmp_path / "ev" / "report.json").read_text())
        assert len(report["per_environment"]) == 5 and report["metric_kind"] == "rmse"
        with open(tmp_path / "ev" / "runs.csv", newline="") as fh:
            assert len(list(csv.reader(fh))) == 6

    def test_experiment_outputs(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(SMALL_EXPERIMENT)
        out = tmp_path / "out"
        assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 0
        files = read_bytes(out)
        assert set(files) == {"report.json", "runs.csv", "config.resolved.ini",
                              "weights/rep_000.csv", "weights/rep_001.csv"}
        report = json.loads(files["report.json"])
        assert report["version"] == __version__
        assert report["config"]["experiment"]["seed"] == "11"
        assert report["config"]["srdo"]["clip_hi"] == "20"
        assert set(report["methods"]) == {"ols", "lasso", "srdo+ols"}
        rows = list(csv.DictReader(files["runs.csv"].decode().splitlines()))
        assert len(rows) == 3 * 2 * 2  # methods x environments x repetitions
        # the resolved config reproduces the run
        again = tmp_path / "again"
        (tmp_path / "resolved.ini").write_bytes(files["config.resolved.ini"])
        assert main(["experiment", "--config", str(tmp_path / "resolved.ini"),
                     "--out", str(again)]) == 0
        assert read_bytes(again)["runs.csv"] == files["runs.csv"]

    def test_experiment_needs_output(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(SMALL_EXPERIMENT)
        assert main(["experiment", "--config", str(cfg)]) == 1

    def test_experiment_csv_route(self, tmp_path):
        rng = np.random.default_rng(1)
        n = 300
        year = rng.uniform(0, 30, n)
        x1 = rng.normal(size=n)
        x2 = 0.8 * x1 + 0.6 * rng.normal(size=n)
        y = x1 - x2 + 0.05 * year * x2 + rng.normal(size=n)
        lines = ["year,x1,x2,y"] + [f"{a:.17g},{b:.17g},{c:.17g},{d:.17g}" for a, b, c, d in
                                     zip(year, x1, x2, y)]
        (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
        (tmp_path / "c.ini").write_text(
            "[experiment]\nseed = 4\nrepetitions = 1\nmethods = ols, srdo+ols\n"
            "[data]\npath = d.csv\nenvironment_column = year\nbin_edges = 0, 10, 20, 30\n")
        out = tmp_path / "out"
        assert main(["experiment", "--config", str(tmp_path / "c.ini"), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert [e["tag"] for e in report["environments"]] == ["[0, 10)", "[10, 20)", "[20, 30]"]
        assert report["methods"]["ols"]["beta_error"] is None


class TestDeterminism:
    def test_simulate_twice(self, tmp_path):
        assert main(["simulate", "--seed", "7", "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate", "--seed", "7", "--out", str(tmp_path / "b")]) == 0
        assert read_bytes(tmp_path / "a") == read_bytes(tmp_path / "b")

    def test_every_subcommand_twice(self, tmp_path):
        main(["simulate", "--seed", "2", "--out", str(tmp_path / "sim")])
        train = str(tmp_path / "sim" / "train.csv")
        cfg = tmp_path / "exp.ini"
        cfg.write_text(SMALL_EXPERIMENT)
        for tag in ("a", "b"):
            d = tmp_path / tag
            assert main(["reweight", "--data", train, "--seed", "3", "--out", str(d / "rw")]) == 0
            assert main(["fit", "--data", train, "--weights", str(d / "rw" / "weights.csv"),
                         "--method", "elastic_net", "--lambda1", "0.01", "--lambda2", "0.01",
                         "--out", str(d / "m.json")]) == 0
            assert main(["evaluate", "--model", str(d / "m.json"), "--data",
                         str(tmp_path / "sim" / "test_01.csv"), "--out", str(d / "ev")]) == 0
            assert main(["experiment", "--config", str(cfg), "--out", str(d / "exp")]) == 0
        a, b = read_bytes(tmp_path / "a"), read_bytes(tmp_path / "b")
        assert a.keys() == b.keys()
        for name in a:
            if name != "m.json" and not name.startswith("ev/"):
                assert a[name] == b[name], name
        # these embed their own input paths, which differ between a/ and b/
        ma, mb = json.loads(a["m.json"]), json.loads(b["m.json"])
        ma.pop("weights"), mb.pop("weights")
        assert ma == mb

    def test_parallel_jobs_same_runs(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(SMALL_EXPERIMENT)
        main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"])
        a, b = read_bytes(tmp_path / "a"), read_bytes(tmp_path / "b")
        assert a["runs.csv"] == b["runs.csv"]
        assert a["weights/rep_001.csv"] == b["weights/rep_001.csv"]
