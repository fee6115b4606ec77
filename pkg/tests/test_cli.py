import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hydrostokes import cli
from hydrostokes.config import ConfigError, config_from_dict, defaults_yaml


def write_config(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestConfig:
    def test_defaults_round_trip(self):
        cfg = config_from_dict(yaml.safe_load(defaults_yaml()))
        assert cfg == config_from_dict({})

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"solver": {"dtt": 0.1}})

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            config_from_dict({"lifespan": {"mu": 0.7}}).validate()

    def test_print_defaults_subprocess(self):
        out = subprocess.run([sys.executable, "-m", "hydrostokes.cli", "print-defaults"],
                             capture_output=True, text=True, check=True).stdout
        assert yaml.safe_load(out)["domain"]["Nz"] == 17


class TestExitCodes:
    def test_bad_config_file(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("solver: [unclosed")
        assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 1

    def test_unknown_block(self, tmp_path):
        p = write_config(tmp_path / "c.yaml", {"solvr": {}})
        assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 1

    def test_taylor_green_solve(self, tmp_path):
        out = tmp_path / "o"
        p = write_config(tmp_path / "c.yaml", {"domain": {"Nx": 8, "Ny": 8, "Nz": 9}})
        assert cli.main(["solve", "--config", str(p), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["analytic_error"] < 1e-6 and summary["sweeps"] == 1
        assert (out / "trace.csv").read_text().splitlines()[0] == "m,H_m,K_m,M_m,L_m,contraction"
        assert len((out / "norms.jsonl").read_text().splitlines()) == summary["n_snapshots"]
        assert len(list((out / "checkpoints").glob("*.chk"))) == summary["n_snapshots"]

    def test_checkpoint_restart(self, tmp_path):
        out = tmp_path / "o"
        p = write_config(tmp_path / "c.yaml", {"domain": {"Nx": 8, "Ny": 8, "Nz": 9},
                                                "data": {"generator": "random_solenoidal"}})
        assert cli.main(["solve", "--config", str(p), "--out", str(out)]) == 0
        chk = sorted((out / "checkpoints").glob("*.chk"))[-1]
        p2 = write_config(tmp_path / "c2.yaml", {"data": {"generator": "checkpoint", "checkpoint": str(chk)},
                                                 "solver": {"T": 0.1}})
        assert cli.main(["solve", "--config", str(p2), "--out", str(tmp_path / "o2")]) == 0

    def test_missing_checkpoint(self, tmp_path):
        p = write_config(tmp_path / "c.yaml", {"data": {"generator": "checkpoint",
                                                        "checkpoint": str(tmp_path / "none.chk")}})
        assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 1

    def test_rough_nonconvergence(self, tmp_path):
        out = tmp_path / "o"
        p = write_config(tmp_path / "c.yaml", {
            "data": {"generator": "rough_split", "a2_amplitude": 64.0, "seed": 3},
            "solver": {"M_sweeps": 40},
        })
        assert cli.main(["solve", "--config", str(p), "--out", str(out)]) == 2
        assert json.loads((out / "summary.json").read_text())["converged"] is False

    def test_etd_blow_up(self, tmp_path):
        out = tmp_path / "o"
        p = write_config(tmp_path / "c.yaml", {
            "domain": {"Nx": 8, "Ny": 8, "Nz": 9},
            "data": {"generator": "random_solenoidal", "amplitude": 1e4, "bandlimit": 3, "seed": 2},
            "solver": {"mode": "etd", "T": 5.0, "dt": 0.1},
            "output": {"checkpoints": False},
        })
        with np.errstate(all="ignore"):
            assert cli.main(["solve", "--config", str(p), "--out", str(out)]) == 3
        assert json.loads((out / "summary.json").read_text())["status"] == "blow_up"

    def test_recursion(self, capsys):
        assert cli.main(["recursion"]) == 0
        res = json.loads(capsys.readouterr().out)
        assert res["bounded"] and res["H_max"] <= 2.0
        assert cli.main(["recursion", "--eps", "0.5"]) == 2
        capsys.readouterr()
        assert cli.main(["recursion", "--eps", "0"]) == 0
        assert json.loads(capsys.readouterr().out)["x0"] == 0.0

    def test_bad_seed(self, tmp_path):
        assert cli.main(["solve", "--seed", "-1", "--out", str(tmp_path)]) == 1

    def test_lifespan_bad_mu(self, tmp_path):
        p = write_config(tmp_path / "c.yaml", {"lifespan": {"mu": 0.5}})
        assert cli.main(["lifespan", "--config", str(p), "--out", str(tmp_path / "o")]) == 1


def test_lifespan_small(tmp_path):
    out = tmp_path / "o"
    p = write_config(tmp_path / "c.yaml", {
        "domain": {"Nx": 8, "Ny": 8, "Nz": 9},
        "data": {"generator": "random_solenoidal", "amplitude": 5.0, "bandlimit": 3, "seed": 1},
        "lifespan": {"n_halvings": 8, "n_steps": 4, "M_sweeps": 20},
    })
    assert cli.main(["lifespan", "--config", str(p), "--out", str(out)]) == 0
    rows = (out / "lifespan.csv").read_text().splitlines()
    assert rows[0] == "lambda,triple_norm,T_bound,T_empirical" and len(rows) == 5
    bounds = [float(r.split(",")[2]) for r in rows[1:]]
    assert all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))


def test_verify_restricted_and_inject(tmp_path):
    p = write_config(tmp_path / "c.yaml", {"verify": {"suite": ["grad_semigroup"], "n_samples": 1}})
    assert cli.main(["verify", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    lines = (tmp_path / "a" / "reports.jsonl").read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["verdict"] == "pass"
    assert cli.main(["verify", "--inject-failure", "--config", str(p), "--out", str(tmp_path / "b")]) != 0


def test_outputs_byte_identical(tmp_path):
    p = write_config(tmp_path / "c.yaml", {
        "domain": {"Nx": 8, "Ny": 8, "Nz": 9},
        "data": {"generator": "random_solenoidal"},
        "verify": {"suite": ["grad_semigroup", "frac_gradient_interpolation"], "n_samples": 1,
                   "frac_gradient_trials": 5},
    })
    for run in ("r1", "r2"):
        assert cli.main(["solve", "--config", str(p), "--seed", "7", "--out", str(tmp_path / run)]) == 0
        assert cli.main(["verify", "--config", str(p), "--seed", "7", "--out", str(tmp_path / run / "v")]) == 0
    for name in ("trace.csv", "norms.jsonl", "summary.json", "checkpoints/snapshot_0003.chk",
                 "v/reports.jsonl", "v/reports.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
