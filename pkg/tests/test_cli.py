"""The experiment runner: config validation, exit codes, determinism."""

import json

import numpy as np
import pytest

from idtlab.cli import emit_report, main, run_experiment
from idtlab.errors import ConfigError


def run_cli(tmp_path, config, scenario=None, extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "out"
    code = main([scenario or config["scenario"], "--config", str(cfg),
                 "--out", str(out), *extra])
    return code, out


IDT_CFG = {
    "scenario": "idt-test",
    "construction": {"kind": "brownian"},
    "n": 2,
    "times": [0.5, 1.0],
    "probes": [[0.25, 0.25], [0.5, -0.5], [1.0, 0.5]],
    "m": 4000,
    "level": 0.01,
    "seed": 4242,
}


class TestScenarios:
    def test_idt_pass(self, tmp_path):
        code, out = run_cli(tmp_path, IDT_CFG)
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["decision"] == "pass"
        assert rep["scenario"] == "idt-test"

    def test_idt_reject_exit_two(self, tmp_path):
        cfg = dict(IDT_CFG, construction={"kind": "besq1"}, times=[1.0],
                   probes=[0.25, 0.5, 1.0], m=8000, seed=7)
        code, out = run_cli(tmp_path, cfg)
        assert code == 2
        rep = json.loads((out / "report.json").read_text())
        assert rep["decision"] == "reject"

    def test_simulate_writes_ensemble(self, tmp_path):
        cfg = {
            "scenario": "simulate",
            "construction": {"kind": "brownian"},
            "times": [0.5, 1.0],
            "m": 10,
            "seed": 3,
        }
        code, out = run_cli(tmp_path, cfg)
        assert code == 0
        lines = (out / "data_paths.csv").read_text().strip().split("\n")
        assert lines[0] == "path_id,time,value"
        assert len(lines) == 1 + 10 * 3

    def test_mimic_scenario(self, tmp_path):
        cfg = {
            "scenario": "mimic-test",
            "construction": {"kind": "stable-ray", "alpha": 1.0},
            "triplet": {"drift": 0.0, "gaussian_var": 0.0,
                        "jump_part": {"kind": "symmetric-stable", "alpha": 1.0,
                                      "scale": 1.0}},
            "times": [1.0, 3.0],
            "probes": [0.25, 0.5],
            "m": 5000,
            "level": 0.01,
            "seed": 5,
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        # the joint-probe variant demonstrates the marginal-only agreement
        cfg["joint_probes"] = [[2.0, -1.0]]
        cfg["times"] = [1.0, 2.0]
        code, _ = run_cli(tmp_path, cfg)
        assert code == 2

    def test_tsd_scenario(self, tmp_path):
        cfg = {
            "scenario": "tsd-test",
            "construction": {"kind": "brownian"},
            "c": 0.5,
            "times": [1.0],
            "probes": [0.5, 1.0],
            "m": 4000,
            "level": 0.01,
            "seed": 77,
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0

    def test_spectral_scenario(self, tmp_path):
        cfg = {
            "scenario": "spectral",
            "phi": {"kind": "power-tail-upper", "alpha": 1.0},
            "y_grid": {"min": -2.0, "max": 2.0, "count": 9},
            "pair_times": [0.5, 1.0, 2.0],
            "seed": 1,
        }
        code, out = run_cli(tmp_path, cfg)
        assert code == 0
        dens = (out / "data_density.csv").read_text().split("\n")
        assert dens[0] == "y,density"
        cov = (out / "data_covariance.csv").read_text().split("\n")
        assert cov[0] == "s,t,covariance"
        rep = json.loads((out / "report.json").read_text())
        assert rep["scaling_residual"] < 1e-6
        assert rep["fourier_max_abs_err"] < 1e-4

    def test_transform_measure_scenario(self, tmp_path):
        cfg = {
            "scenario": "transform-measure",
            "nu": {"kind": "inverse-sqrt"},
            "v_grid": {"min": 0.1, "max": 10.0, "count": 20, "log": True},
            "reference": "inverse-sqrt-mixture",
            "seed": 3,
        }
        code, out = run_cli(tmp_path, cfg)
        assert code == 0
        head = (out / "data_mixture.csv").read_text().split("\n")[0]
        assert head == "v,computed,closed_form"
        rep = json.loads((out / "report.json").read_text())
        assert rep["max_relative_error"] < 1e-3

    def test_path_measure_scenario(self, tmp_path):
        cfg = {
            "scenario": "path-measure-check",
            "measure": {"atoms": [{"weight": 1.0, "times": [0.0, 1.0],
                                   "values": [0.0, 1.0]}]},
            "u_max": 7.5,
            "u_cells": 250,
            "n_values": [2, 3],
            "functionals": [{"kind": "indicator-above", "time": 2.0}],
            "seed": 5,
        }
        code, out = run_cli(tmp_path, cfg)
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["u_resolution"] == pytest.approx(0.03)
        assert all(c["max_residual"] <= c["tolerance"] for c in rep["checks"])


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        _, out1 = run_cli(tmp_path / "a", IDT_CFG)
        _, out2 = run_cli(tmp_path / "b", IDT_CFG)
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()

    def test_worker_count_byte_identical(self, tmp_path):
        _, out1 = run_cli(tmp_path / "a", IDT_CFG, extra=["--workers", "1"])
        _, out2 = run_cli(tmp_path / "b", IDT_CFG, extra=["--workers", "3"])
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()

    def test_seed_flag_overrides(self, tmp_path):
        _, out = run_cli(tmp_path, IDT_CFG, extra=["--seed", "111"])
        rep = json.loads((out / "report.json").read_text())
        assert rep["seed"] == 111

    def test_seed_env_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("IDT_SEED", "999")
        _, out = run_cli(tmp_path, IDT_CFG)
        rep = json.loads((out / "report.json").read_text())
        assert rep["seed"] == 999


class TestValidation:
    def test_unknown_field_rejected(self, tmp_path):
        code, _ = run_cli(tmp_path, dict(IDT_CFG, bogus=1))
        assert code == 1

    def test_missing_field_rejected(self, tmp_path):
        cfg = dict(IDT_CFG)
        del cfg["level"]
        code, _ = run_cli(tmp_path, cfg)
        assert code == 1

    def test_scenario_mismatch(self, tmp_path):
        code, _ = run_cli(tmp_path, IDT_CFG, scenario="tsd-test")
        assert code == 1

    def test_missing_seed(self, tmp_path):
        cfg = dict(IDT_CFG)
        del cfg["seed"]
        code, _ = run_cli(tmp_path, cfg)
        assert code == 1

    def test_error_json_on_stderr(self, tmp_path, capsys):
        run_cli(tmp_path, dict(IDT_CFG, bogus=1))
        err = capsys.readouterr().err
        obj = json.loads(err)
        assert obj["error"] == "ConfigError"

    def test_run_experiment_rejects_bad_scenario(self, tmp_path):
        with pytest.raises(ConfigError):
            run_experiment({"scenario": "nonsense", "seed": 1}, tmp_path)

    def test_inline_table_format(self, tmp_path):
        cfg = {
            "scenario": "transform-measure",
            "nu": {"kind": "inverse-sqrt"},
            "v_grid": [1.0, 2.0],
            "seed": 3,
            "output": {"format": "json"},
        }
        code, out = run_cli(tmp_path, cfg)
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert "data_mixture" in rep["tables"]
        assert not (out / "data_mixture.csv").exists()


class TestEmitReport:
    def test_json_bytes_stable(self, tmp_path):
        obj = {"b": 1.5, "a": [1, 2.25], "nested": {"x": True}}
        p1 = emit_report(obj, "json", tmp_path / "r1.json")
        p2 = emit_report(obj, "json", tmp_path / "r2.json")
        assert p1.read_bytes() == p2.read_bytes()
        assert json.loads(p1.read_text()) == obj

    def test_csv_emission(self, tmp_path):
        table = (("v", "x"), [(1.0, 2.0), (3.0, 4.5)])
        p = emit_report(table, "csv", tmp_path / "t.csv")
        assert p.read_text() == "v,x\n1.0,2.0\n3.0,4.5\n"
