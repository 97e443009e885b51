"""
Tests for logging setup, run identification and output-path resolution.
"""

import logging
import uuid

import pytest

from app.core import logging as core_logging
from app.core.config_paths import DEFAULT_OUT_DIRNAME, resolve_out_dir
from app.core.logging import config_fingerprint, configure_logging, generate_run_id, resolve_log_level


@pytest.fixture
def clean_root(monkeypatch):
    """Restore the root logger after a test reconfigures it."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    monkeypatch.setattr(core_logging, "_CONFIGURED", False)
    yield root
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


def test_generate_run_id():
    """Test run IDs are unique UUIDs."""
    run_id = generate_run_id()
    uuid.UUID(run_id)
    assert run_id != generate_run_id()


def test_config_fingerprint_ignores_key_order():
    """Test the fingerprint is a SHA-256 of the canonical form."""
    a = config_fingerprint({"model": {"a1": 3.0, "a2": 2.0}, "seed": 0})
    b = config_fingerprint({"seed": 0, "model": {"a2": 2.0, "a1": 3.0}})
    assert a == b
    assert len(a) == 64
    assert a != config_fingerprint({"seed": 1, "model": {"a2": 2.0, "a1": 3.0}})


def test_resolve_log_level(monkeypatch):
    """Test explicit names, the env override and the fallback."""
    monkeypatch.delenv(core_logging.LOG_LEVEL_ENV, raising=False)
    assert resolve_log_level() == logging.WARNING
    assert resolve_log_level("debug") == logging.DEBUG
    assert resolve_log_level("nonsense") == logging.WARNING
    monkeypatch.setenv(core_logging.LOG_LEVEL_ENV, "INFO")
    assert resolve_log_level() == logging.INFO
    assert resolve_log_level("ERROR") == logging.ERROR


def test_configure_logging_installs_one_handler(clean_root):
    """Test repeated configuration keeps a single handler and updates the level."""
    configure_logging("INFO")
    assert len(clean_root.handlers) == 1
    assert clean_root.level == logging.INFO
    configure_logging("DEBUG")
    assert len(clean_root.handlers) == 1
    assert clean_root.level == logging.DEBUG
    configure_logging("WARNING", force=True)
    assert len(clean_root.handlers) == 1
    assert clean_root.level == logging.WARNING


def test_resolve_out_dir_order(tmp_path, monkeypatch):
    """Test --out beats the env var, which beats ./chemotax_out."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CHEMOTAX_LV_OUT", raising=False)
    assert resolve_out_dir() == (tmp_path / DEFAULT_OUT_DIRNAME).resolve()

    monkeypatch.setenv("CHEMOTAX_LV_OUT", str(tmp_path / "from_env"))
    assert resolve_out_dir() == (tmp_path / "from_env").resolve()
    assert resolve_out_dir(str(tmp_path / "explicit")) == (tmp_path / "explicit").resolve()
    assert (tmp_path / "explicit").is_dir()
    assert not any((tmp_path / "explicit").iterdir())


def test_resolve_out_dir_unwritable(tmp_path):
    """Test a path under a regular file is rejected."""
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(OSError):
        resolve_out_dir(str(blocker / "sub"))
