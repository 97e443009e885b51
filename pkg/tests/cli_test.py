"""
CLI tests for chemotax-lv.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

# Base command for running the CLI
# In development: python -m app
# When installed: chemotax-lv
BASE_CMD = [sys.executable, "-m", "app"]
PROJECT_ROOT = Path(__file__).resolve().parent.parent


def run_cli_command(args, check=True, capture_output=True, timeout=60):
    """Helper function to run CLI commands."""
    cmd = BASE_CMD + [str(a) for a in args]
    # Use errors='replace' to avoid encoding errors on Windows
    result = subprocess.run(
        cmd,
        check=check,
        capture_output=capture_output,
        text=True,
        encoding="utf-8",
        errors="replace",
        timeout=timeout,
        cwd=PROJECT_ROOT,
    )
    return result


@pytest.fixture
def config_file(tmp_path):
    """Write a config file and return its path."""

    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


def test_cli_version():
    """Test version command."""
    result = run_cli_command(["version"])
    assert result.returncode == 0
    assert "version" in result.stdout.lower()
    assert "0.1.0" in result.stdout


def test_cli_version_verbose():
    """Test version command with verbose flag."""
    result = run_cli_command(["version", "--verbose"])
    assert result.returncode == 0
    assert "Python" in result.stdout
    assert "numpy" in result.stdout


def test_cli_help():
    """Test main help lists every command."""
    result = run_cli_command(["--help"])
    assert result.returncode == 0
    for command in ("equilibria", "stability", "simulate", "continue", "shadow-branch", "layer",
                    "verify-shadow-limit", "verify-all", "config", "version"):
        assert command in result.stdout


def test_cli_stability_run(tmp_path, config_file):
    """Test a stability run writes its table and manifest."""
    out = tmp_path / "out"
    result = run_cli_command(["stability", "--config", config_file("stability.k_max = 8\n"), "--out", out])
    assert result.returncode == 0
    assert "finished" in result.stdout
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "stability.csv"]
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["summary"]["k0"] == 1


def test_cli_out_from_env(tmp_path, config_file, monkeypatch):
    """Test CHEMOTAX_LV_OUT is used when --out is absent."""
    out = tmp_path / "env_out"
    monkeypatch.setenv("CHEMOTAX_LV_OUT", str(out))
    result = run_cli_command(["equilibria", "--config", config_file("")])
    assert result.returncode == 0
    assert (out / "equilibria.csv").exists()


def test_cli_malformed_config(tmp_path, config_file):
    """Test a malformed config exits 2 and leaves only the manifest."""
    out = tmp_path / "out"
    result = run_cli_command(
        ["stability", "--config", config_file("model.a1 = 1\nbogus.key = 2\n"), "--out", out], check=False
    )
    assert result.returncode == 2
    assert "UnknownKey" in result.stderr
    assert [p.name for p in out.iterdir()] == ["manifest.json"]
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "error"


def test_cli_seed_override(tmp_path, config_file):
    """Test --seed lands in the manifest."""
    out = tmp_path / "out"
    result = run_cli_command(["equilibria", "--config", config_file("seed = 1\n"), "--out", out, "--seed", 9])
    assert result.returncode == 0
    assert json.loads((out / "manifest.json").read_text(encoding="utf-8"))["seed"] == 9


def test_cli_config_show(config_file):
    """Test config show prints the resolved config as JSON."""
    result = run_cli_command(["config", "show", "--config", config_file("model.chi = 14.025\n")])
    assert result.returncode == 0
    resolved = json.loads(result.stdout)
    assert resolved["model"]["chi"] == 14.025
    assert resolved["grid"]["n"] == 512


def test_cli_config_show_missing_file(tmp_path):
    """Test config show on a missing file."""
    result = run_cli_command(["config", "show", "--config", tmp_path / "absent.cfg"], check=False)
    assert result.returncode == 2


def test_cli_config_validate(config_file):
    """Test config validate accepts a good file."""
    result = run_cli_command(["config", "validate", "--config", config_file("time.dt = 1e-3\n")])
    assert result.returncode == 0
    assert "valid" in result.stdout


def test_cli_config_validate_rejects(config_file):
    """Test config validate reports every failing check."""
    path = config_file("time.dt = 0\n")
    result = run_cli_command(["config", "validate", "--config", path, "--command", "simulate"], check=False)
    assert result.returncode == 2
    assert "time.dt" in result.stdout + result.stderr


def test_cli_config_validate_unknown_command(config_file):
    """Test an unknown command name."""
    result = run_cli_command(["config", "validate", "--config", config_file(""), "--command", "plot"], check=False)
    assert result.returncode == 2
