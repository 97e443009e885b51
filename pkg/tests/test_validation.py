"""
Tests for pre-run configuration checks.
"""

import pytest

from app.core.errors import ConfigValidationError
from app.core.validation import COMMAND_CHECKS, validate_grid, validate_model, validate_run
from app.experiments.config_loader import parse_config
from app.experiments.runner import COMMANDS


def test_every_command_has_checks():
    """Test each runnable command has an entry."""
    assert set(COMMAND_CHECKS) == set(COMMANDS)


def test_validate_grid():
    """Test the minimum node count."""
    assert validate_grid(16) == (True, "")
    ok, message = validate_grid(8)
    assert not ok
    assert "at least 16" in message


def test_validate_model_collects_all_errors():
    """Test every bad constant is reported at once."""
    ok, errors = validate_model(parse_config("model.a1 = -1\nmodel.D2 = 0\nmodel.tau = -1\n"))
    assert not ok
    assert errors == [
        "model.a1 must be non-negative",
        "model.D2 must be positive",
        "model.tau must be non-negative",
    ]


def test_defaults_valid_for_every_command():
    """Test the default configuration passes all command checks."""
    config = parse_config("model.b1 = 0")
    for command in COMMAND_CHECKS:
        validate_run(command, config)


@pytest.mark.parametrize(
    "command,text,fragment",
    [
        ("simulate", "time.dt = 0", "time.dt"),
        ("continue", "continue.chi_min = 20\ncontinue.chi_max = 10", "chi_min"),
        ("continue", "continue.k = 0", "continue.k"),
        ("shadow-branch", "shadow.n_mode = 0", "shadow.n_mode"),
        ("layer", "layer.eps = 0.1\nmodel.b1 = 0", "layer.eps"),
        ("layer", "model.b1 = 1", "model.b1 = 0"),
        ("verify-shadow-limit", "limit.D1_list = 100, 10, 1000", "strictly increasing"),
        ("verify-shadow-limit", "limit.D1_list = 100, 1000", "at least 3"),
        ("stability", "stability.k_max = 0", "k_max"),
    ],
)
def test_validate_run_rejects(command, text, fragment):
    """Test command-specific failures surface in the error list."""
    with pytest.raises(ConfigValidationError) as exc_info:
        validate_run(command, parse_config(text))
    assert any(fragment in message for message in exc_info.value.details["errors"])


def test_checks_only_apply_to_their_command():
    """Test a bad time section does not block a stability run."""
    validate_run("stability", parse_config("time.dt = 0"))
