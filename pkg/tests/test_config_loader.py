"""
Tests for run-configuration parsing and the cached loader.
"""

import logging
import os

import pytest

from app.core.errors import ConfigValidationError, ParseError, UnknownKey
from app.experiments.config_loader import RunConfigLoader, parse_config
from app.experiments.models import RunConfig


def test_empty_text_gives_defaults():
    """Test an empty file resolves to the documented defaults."""
    config = parse_config("")
    assert config == RunConfig()
    assert config.model.a1 == 3.0
    assert config.grid.n == 512
    assert config.seed == 0


def test_parse_values_and_comments():
    """Test keys, inline comments, blank lines and type conversion."""
    text = """
    # weak competition
    model.chi = 14.025   # 1.1 chi_0
    model.phi.p1 = 0.5
    grid.n = 256
    continue.k = 2
    seed = 7
    """
    config = parse_config(text)
    assert config.model.chi == pytest.approx(14.025)
    assert config.model.sensitivity().p1 == 0.5
    assert config.grid.n == 256
    assert config.continuation.k == 2
    assert config.seed == 7


def test_parse_lists_and_none():
    """Test comma-separated lists and 'none' for optional keys."""
    config = parse_config("limit.D1_list = 1e2, 1e3,1e4\nsimulate.modes = 1,2\nlayer.v_bar2 = none\n")
    assert config.limit.D1_list == [100.0, 1000.0, 10000.0]
    assert config.simulate.modes == [1, 2]
    assert config.layer.v_bar2 is None


def test_integer_written_as_float():
    """Test an integral float is accepted for an integer key."""
    assert parse_config("grid.n = 1e3").grid.n == 1000


def test_unknown_key():
    """Test an undocumented key raises with its line number."""
    with pytest.raises(UnknownKey) as exc_info:
        parse_config("model.a1 = 1\nmodel.a9 = 2\n")
    assert exc_info.value.details == {"key": "model.a9", "line": 2}
    assert exc_info.value.exit_code == 2


@pytest.mark.parametrize(
    "text",
    ["model.a1 2", "model.a1 =", "= 2", "model.a1 = two", "grid.n = 10.5", "model.a1 = none"],
)
def test_parse_errors(text):
    """Test malformed lines and values raise ParseError."""
    with pytest.raises(ParseError):
        parse_config(text)


def test_duplicate_key_warns(caplog):
    """Test the last duplicate wins and a warning is kept."""
    with caplog.at_level(logging.WARNING, logger="run_orchestrator"):
        config = parse_config("model.chi = 1\nmodel.chi = 2\n")
    assert config.model.chi == 2.0
    assert len(config.warnings) == 1
    assert "Duplicate key 'model.chi'" in config.warnings[0]
    assert any("Duplicate" in rec.message for rec in caplog.records)


def test_validation_error_collects_messages():
    """Test a value outside a literal set fails model validation."""
    with pytest.raises(ConfigValidationError) as exc_info:
        parse_config("simulate.init = sideways")
    assert exc_info.value.details["errors"]
    assert "init" in exc_info.value.details["errors"][0]


def test_echo_uses_config_keys():
    """Test the echoed config is keyed like the config file."""
    echo = parse_config("continue.k = 3").echo()
    assert echo["continue"]["k"] == 3
    assert echo["model"]["phi.p0"] == 1.0
    assert "warnings" not in echo


def test_loader_defaults_without_path():
    """Test None loads the defaults."""
    assert RunConfigLoader().load_config(None) == RunConfig()


def test_loader_missing_file(tmp_path):
    """Test a missing file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        RunConfigLoader().load_config(tmp_path / "absent.cfg")


def test_loader_cache(tmp_path):
    """Test the cache, force_reload and clear_cache."""
    path = tmp_path / "run.cfg"
    path.write_text("model.chi = 1\n", encoding="utf-8")
    loader = RunConfigLoader()
    first = loader.load_config(path)
    assert loader.load_config(path) is first

    stat = path.stat()
    path.write_text("model.chi = 5\n", encoding="utf-8")
    os.utime(path, ns=(stat.st_atime_ns, stat.st_mtime_ns))
    assert loader.load_config(path).model.chi == 1.0
    assert loader.load_config(path, force_reload=True).model.chi == 5.0

    loader.clear_cache()
    assert loader.load_config(path) is not first


def test_shipped_run_files_parse():
    """Test every shipped run file parses cleanly."""
    from pathlib import Path

    runs = Path(__file__).resolve().parent.parent / "config" / "runs"
    files = sorted(runs.glob("*.cfg"))
    assert files
    for path in files:
        config = RunConfigLoader().load_config(path)
        assert not config.warnings, path.name
