"""
命令行测试：退出码、配置校验和输出产物
"""

import json

import pandas as pd
import pytest

from kolmogorov_fields.config import EXIT_CODES
from kolmogorov_fields.core.exceptions import DomainError, QuadratureFailureError
from kolmogorov_fields.main import main
from kolmogorov_fields.storage.artifact_store import RunManifest, verify_outputs


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def run_cli(tmp_path, group, action, data=None, *extra):
    argv = [group, action, "--out", str(tmp_path / "out"), "--log-level", "WARNING"]
    if data is not None:
        argv += ["--config", write_config(tmp_path, data)]
    return main(argv + list(extra))


@pytest.mark.parametrize("data", [
    {"modulus": {"kind": "power", "epsilon": 1.0}, "gamma": 2.0},
    {"modulus": {"kind": "logpower", "beta": 2.0}, "gamma": 1.0, "theta": 0.75},
])
def test_modulus_check_passes(tmp_path, data):
    assert run_cli(tmp_path, "modulus", "check", data) == EXIT_CODES["pass"]
    out = tmp_path / "out"
    for name in ("admissibility_report.json", "modulus_profile.csv", "ratio_profile.csv", "manifest.json"):
        assert (out / name).exists()
    report = json.loads((out / "admissibility_report.json").read_text(encoding="utf-8"))
    assert report["verdict"] == "pass"


def test_modulus_theta_outside_window_fails(tmp_path):
    data = {"modulus": {"kind": "logpower", "beta": 2.0}, "gamma": 1.0, "theta": 0.3}
    assert run_cli(tmp_path, "modulus", "check", data) == EXIT_CODES["fail"]


def test_manifest_checksums_match_outputs(tmp_path):
    run_cli(tmp_path, "modulus", "check", {"modulus": {"kind": "power", "epsilon": 0.5}, "gamma": 1.0}, "--seed", "11")
    manifest = RunManifest.load(tmp_path / "out" / "manifest.json")
    assert manifest.command == "modulus_check"
    assert manifest.seed == 11
    assert "manifest.json" not in manifest.outputs
    assert verify_outputs(manifest, tmp_path / "out") == []


def test_malformed_json_is_usage_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"gamma\": ", encoding="utf-8")
    assert main(["modulus", "check", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CODES["usage"]


def test_missing_config_file_is_usage_error(tmp_path):
    argv = ["modulus", "check", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)]
    assert main(argv) == EXIT_CODES["usage"]


@pytest.mark.parametrize("group, action, data", [
    ("modulus", "check", {"modulus": {"kind": "power", "epsilon": 1.0}, "gamma": 2.0, "colour": "red"}),
    ("modulus", "check", {"modulus": {"kind": "cubic"}, "gamma": 2.0}),
    ("modulus", "check", {"gamma": 2.0}),
    ("chain", "estimate", {"field": {"generator": "linear", "m_max": 4}, "replications": 0, "gamma": 2.0}),
    ("chain", "estimate", {"field": {"generator": "brownian", "m_max": 4, "d": 2}, "replications": 2,
                           "gamma": 2.0}),
    ("modulus", "check", {"modulus": {"kind": "power", "epsilon": 1.0}, "gamma": 2.0, "theta": 0.6}),
])
def test_invalid_configs_are_usage_errors(tmp_path, group, action, data):
    assert run_cli(tmp_path, group, action, data) == EXIT_CODES["usage"]
    assert not (tmp_path / "out" / "manifest.json").exists()


@pytest.mark.parametrize("extra", [
    ["--seed", "-1"],
    ["--seed", "abc"],
    ["--threads", "0"],
    ["--verify", "sup"],
    ["--log-level", "LOUD"],
])
def test_bad_arguments_are_usage_errors(tmp_path, extra):
    data = {"modulus": {"kind": "power", "epsilon": 1.0}, "gamma": 2.0}
    assert run_cli(tmp_path, "modulus", "check", data, *extra) == EXIT_CODES["usage"]


def test_unknown_command_is_usage_error(tmp_path):
    assert main(["modulus", "estimate", "--out", str(tmp_path)]) == EXIT_CODES["usage"]
    assert main(["wave", "check"]) == EXIT_CODES["usage"]


def test_linear_chain_estimate_passes(tmp_path):
    data = {"field": {"generator": "linear", "m_max": 5, "n_time": 2}, "replications": 4, "gamma": 2.0,
            "save_sample": True}
    assert run_cli(tmp_path, "chain", "estimate", data) == EXIT_CODES["pass"]
    out = tmp_path / "out"
    report = json.loads((out / "chain_report.json").read_text(encoding="utf-8"))
    assert report["generator"] == "linear"
    bounds = pd.read_csv(out / "seminorm_bounds.csv")
    assert not bounds.empty
    assert (out / "field_sample.bin").exists()


def test_spde_zero_forcing_passes_with_zero_snapshots(tmp_path):
    data = {
        "kernel": {"alpha": 2.0, "n": 256},
        "levy": {"total_mass": 2.0, "T": 1.0},
        "forcing": {"name": "zero"},
        "replications": 100,
        "levels": [2, 3, 4],
    }
    assert run_cli(tmp_path, "spde", "run", data, "--threads", "2") == EXIT_CODES["pass"]
    out = tmp_path / "out"
    snapshots = pd.read_csv(out / "u_snapshots.csv")
    assert (snapshots["u"] == 0.0).all()
    report = json.loads((out / "spde_report.json").read_text(encoding="utf-8"))
    assert report["n_rep"] == 100
    assert report["notes"] == []
    assert (out / "kernel_profile.csv").exists()


def test_spde_verify_subset_limits_reports(tmp_path):
    data = {"kernel": {"n": 256}, "forcing": {"name": "zero"}, "replications": 100}
    assert run_cli(tmp_path, "spde", "run", data, "--verify", "sup") == EXIT_CODES["pass"]
    report = json.loads((tmp_path / "out" / "spde_report.json").read_text(encoding="utf-8"))
    assert "sup_bound" in report
    assert "modulus_estimate" not in report
    assert "kunita" not in report


def test_spde_unknown_verify_set_is_usage_error(tmp_path):
    data = {"kernel": {"n": 256}, "forcing": {"name": "zero"}, "replications": 100}
    assert run_cli(tmp_path, "spde", "run", data, "--verify", "sup,energy") == EXIT_CODES["usage"]


def test_spde_small_box_reports_mass_deficit(tmp_path):
    data = {"kernel": {"L": 6.283185307179586, "n": 64}, "forcing": {"name": "zero"}, "replications": 100,
            "levels": [2, 3, 4]}
    assert run_cli(tmp_path, "spde", "run", data) == EXIT_CODES["fail"]
    out = tmp_path / "out"
    report = json.loads((out / "spde_report.json").read_text(encoding="utf-8"))
    assert report["error"] == "mass_deficit"
    assert (out / "manifest.json").exists()
    assert not (out / "u_snapshots.csv").exists()


@pytest.mark.parametrize("data, verify", [
    # n=256 时探测球 K=8，默认层级 [4,5,6] 需要 2K ≥ 64
    ({"kernel": {"n": 256}, "forcing": {"name": "zero"}, "replications": 100}, "modulus"),
    # c1 小于网格步长 ≈ 0.1227
    ({"kernel": {"n": 256}, "forcing": {"name": "zero"}, "replications": 100, "c1": 0.01}, "sup"),
])
def test_spde_ball_settings_are_usage_errors(tmp_path, data, verify):
    assert run_cli(tmp_path, "spde", "run", data, "--verify", verify) == EXIT_CODES["usage"]
    assert not (tmp_path / "out" / "manifest.json").exists()


def test_chain_grid_over_budget_is_inconclusive(tmp_path):
    data = {"field": {"generator": "constant", "m_max": 12, "d": 2}, "replications": 2, "gamma": 2.0}
    assert run_cli(tmp_path, "chain", "estimate", data) == EXIT_CODES["inconclusive"]
    out = tmp_path / "out"
    report = json.loads((out / "chain_report.json").read_text(encoding="utf-8"))
    assert report["error"] == "budget_exceeded"
    assert report["diagnostics"]["size"] == 4097 ** 2
    manifest = RunManifest.load(out / "manifest.json")
    assert manifest.exit_code == EXIT_CODES["inconclusive"]
    assert verify_outputs(manifest, out) == []


def test_spde_quadrature_failure_is_inconclusive(tmp_path, monkeypatch):
    def failing_kernel_eval(kernel, t):
        raise QuadratureFailureError("热核求积误差超限", {"t": t})

    monkeypatch.setattr("kolmogorov_fields.processors.experiment_runner.kernel_eval", failing_kernel_eval)
    data = {"kernel": {"n": 256}, "forcing": {"name": "zero"}, "replications": 100}
    assert run_cli(tmp_path, "spde", "run", data, "--verify", "sup") == EXIT_CODES["inconclusive"]
    out = tmp_path / "out"
    report = json.loads((out / "spde_report.json").read_text(encoding="utf-8"))
    assert report["error"] == "quadrature_failure"
    assert report["diagnostics"] == {"t": 1.0}
    assert (out / "manifest.json").exists()


def test_domain_error_during_execution_is_usage_error(tmp_path, monkeypatch):
    def out_of_domain(*args, **kwargs):
        raise DomainError("gamma 超出定义域", {"gamma": 2.0})

    monkeypatch.setattr("kolmogorov_fields.processors.experiment_runner.check_admissibility", out_of_domain)
    data = {"modulus": {"kind": "power", "epsilon": 1.0}, "gamma": 2.0}
    assert run_cli(tmp_path, "modulus", "check", data) == EXIT_CODES["usage"]
    assert not (tmp_path / "out" / "manifest.json").exists()
