"""
Tests for the run orchestrator: outputs, manifests and exit codes.
"""

import json

import pytest

from app.experiments.config_loader import parse_config
from app.experiments.models import RunConfig
from app.experiments import runner
from app.experiments.runner import COMMANDS, CommandResult, run, run_file

FAST_SIM = """
grid.n = 32
time.dt = 1e-3
time.t_end = 0.1
time.snapshot_every = 0.05
simulate.init = equilibrium
stability.k_max = 8
"""


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


def test_equilibria_outputs(out_dir):
    """Test equilibria.csv rows and the manifest of a successful run."""
    assert run("equilibria", RunConfig(), out_dir, version="0.1.0") == 0
    lines = (out_dir / "equilibria.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "kind,u,v"
    assert [line.split(",")[0] for line in lines[1:]] == ["trivial", "semitrivial_u", "semitrivial_v", "coexistence"]

    manifest = read_manifest(out_dir)
    assert manifest["status"] == "ok"
    assert manifest["exit_code"] == 0
    assert manifest["version"] == "0.1.0"
    assert manifest["files"] == [{"path": "equilibria.csv", "rows": 4}]
    assert manifest["summary"]["regime"] == "Weak"
    assert manifest["config"]["model"]["a1"] == 3.0
    assert len(manifest["config_fingerprint"]) > 0


def test_stability_summary(out_dir):
    """Test the dispersion table and the threshold summary."""
    assert run("stability", parse_config("stability.k_max = 8"), out_dir) == 0
    header = (out_dir / "stability.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "k,lambda_k,chi_k,feasible,re_mu_plus,re_mu_minus"
    summary = read_manifest(out_dir)["summary"]
    assert summary["k0"] == 1
    assert summary["chi0"] == pytest.approx(12.75)
    assert summary["linearly_stable"] is True


def test_simulate_outputs(out_dir):
    """Test snapshots, diagnostics and invariant records."""
    assert run("simulate", parse_config(FAST_SIM), out_dir) == 0
    manifest = read_manifest(out_dir)
    files = {f["path"]: f["rows"] for f in manifest["files"]}
    snapshots = manifest["summary"]["snapshots"]
    assert files == {"snapshots.csv": 32 * snapshots, "diagnostics.csv": snapshots}
    diag_header = (out_dir / "diagnostics.csv").read_text(encoding="utf-8").splitlines()[0]
    assert diag_header == "t,mass_u,sup_v,residual,amp_k1,amp_k2,amp_k3"
    assert manifest["invariants"]
    assert all(record["passed"] for record in manifest["invariants"].values())


def test_outputs_are_byte_identical(tmp_path):
    """Test two runs with the same config and seed write identical CSVs."""
    config = parse_config(FAST_SIM.replace("equilibrium", "random"))
    first, second = tmp_path / "a", tmp_path / "b"
    assert run("simulate", config, first, seed=3) == 0
    assert run("simulate", config, second, seed=3) == 0
    for name in ("snapshots.csv", "diagnostics.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert read_manifest(first)["config_fingerprint"] == read_manifest(second)["config_fingerprint"]


def test_seed_override(out_dir):
    """Test --seed replaces the config seed in the manifest."""
    assert run("equilibria", parse_config("seed = 5"), out_dir, seed=11) == 0
    manifest = read_manifest(out_dir)
    assert manifest["seed"] == 11
    assert manifest["config"]["seed"] == 11


def test_validation_failure_writes_only_manifest(out_dir):
    """Test a rejected config leaves just the error manifest."""
    assert run("simulate", parse_config("time.dt = 0"), out_dir) == 2
    assert [p.name for p in out_dir.iterdir()] == ["manifest.json"]
    manifest = read_manifest(out_dir)
    assert manifest["status"] == "error"
    assert manifest["error"]["type"] == "ConfigValidationError"
    assert manifest["files"] == []


def test_malformed_file_writes_error_manifest(tmp_path, out_dir):
    """Test a config that does not parse still yields a manifest."""
    path = tmp_path / "bad.cfg"
    path.write_text("model.a1 = 1\nmodel.nonsense = 2\n", encoding="utf-8")
    assert run_file("stability", path, out_dir) == 2
    assert [p.name for p in out_dir.iterdir()] == ["manifest.json"]
    error = read_manifest(out_dir)["error"]
    assert error["type"] == "UnknownKey"
    assert error["details"]["line"] == 2


def test_missing_file_is_config_error(tmp_path, out_dir):
    """Test a missing config file maps to exit code 2."""
    assert run_file("equilibria", tmp_path / "absent.cfg", out_dir) == 2
    assert read_manifest(out_dir)["error"]["type"] == "ConfigError"


def test_domain_error_exit_code(out_dir):
    """Test a domain failure inside a command maps to exit code 2."""
    assert run("layer", parse_config("model.b1 = 0\nmodel.a1 = 5\nmodel.c1 = 1"), out_dir) == 2
    assert read_manifest(out_dir)["error"]["category"] == "domain"


def test_unknown_command(out_dir):
    """Test an unknown command is a programming error, not a run."""
    with pytest.raises(ValueError):
        run("plot", RunConfig(), out_dir)
    assert "verify-all" in COMMANDS


def test_unexpected_exception_writes_error_manifest(out_dir, monkeypatch):
    """Test an exception outside the lab hierarchy still ends in a manifest with exit code 1."""

    def broken(config):
        raise ValueError("bad frame")

    monkeypatch.setitem(runner.HANDLERS, "equilibria", broken)
    assert run("equilibria", RunConfig(), out_dir) == 1
    assert [p.name for p in out_dir.iterdir()] == ["manifest.json"]
    manifest = read_manifest(out_dir)
    assert manifest["status"] == "error"
    assert manifest["exit_code"] == 1
    assert manifest["error"]["type"] == "InternalError"
    assert manifest["error"]["category"] == "internal"
    assert manifest["error"]["details"]["exception"] == "ValueError"
    assert "bad frame" in manifest["error"]["message"]


def test_write_failure_lists_files_already_written(out_dir, monkeypatch):
    """Test a failing write leaves a manifest naming the CSVs written before it."""

    def two_files(config):
        result = CommandResult()
        result.add("first.csv", [{"a": 1}], ["a"])
        result.add("second.csv", [{"a": 2}], ["a"])
        return result

    real_write_csv = runner.write_csv

    def write_once(path, rows, columns):
        if path.name == "second.csv":
            raise OSError("disk full")
        return real_write_csv(path, rows, columns)

    monkeypatch.setitem(runner.HANDLERS, "equilibria", two_files)
    monkeypatch.setattr(runner, "write_csv", write_once)
    assert run("equilibria", RunConfig(), out_dir) == 1
    manifest = read_manifest(out_dir)
    assert manifest["files"] == [{"path": "first.csv", "rows": 1}]
    assert manifest["error"]["details"]["exception"] == "OSError"
    assert sorted(p.name for p in out_dir.iterdir()) == ["first.csv", "manifest.json"]
