"""
Pre-run validation of a resolved configuration.

Each check returns (is_valid, message); validate_run aggregates the ones
that apply to a command and raises ConfigValidationError on failure.
"""

from typing import List, Tuple

from app.core.errors import ConfigValidationError
from app.experiments.models import RunConfig

MIN_GRID_NODES = 16


def validate_grid(n: int, name: str = "grid.n") -> Tuple[bool, str]:
    """
    Validate a grid size.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if n < MIN_GRID_NODES:
        return False, f"{name} must be at least {MIN_GRID_NODES}, got {n}"
    return True, ""


def validate_time(config: RunConfig) -> Tuple[bool, str]:
    t = config.time
    if t.dt <= 0:
        return False, f"time.dt must be positive, got {t.dt}"
    if t.t_end <= 0:
        return False, f"time.t_end must be positive, got {t.t_end}"
    if t.snapshot_every <= 0:
        return False, f"time.snapshot_every must be positive, got {t.snapshot_every}"
    return True, ""


def validate_model(config: RunConfig) -> Tuple[bool, List[str]]:
    """
    Validate kinetic and transport constants.

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    m = config.model
    errors = []
    for name in ("a1", "a2", "b1", "b2", "c1", "c2"):
        if getattr(m, name) < 0:
            errors.append(f"model.{name} must be non-negative")
    for name in ("D1", "D2", "L"):
        if getattr(m, name) <= 0:
            errors.append(f"model.{name} must be positive")
    if m.tau < 0:
        errors.append("model.tau must be non-negative")
    return len(errors) == 0, errors


def validate_continuation(config: RunConfig) -> Tuple[bool, List[str]]:
    c = config.continuation
    errors = []
    if c.k < 1:
        errors.append(f"continue.k must be >= 1, got {c.k}")
    if c.ds <= 0:
        errors.append("continue.ds must be positive")
    if c.s0 <= 0:
        errors.append("continue.s0 must be positive")
    if c.chi_min is not None and c.chi_max is not None and c.chi_min >= c.chi_max:
        errors.append("continue.chi_min must be below continue.chi_max")
    ok, message = validate_grid(c.n, "continue.n")
    if not ok:
        errors.append(message)
    return len(errors) == 0, errors


def validate_shadow(config: RunConfig) -> Tuple[bool, List[str]]:
    s = config.shadow
    errors = []
    if s.r <= 0:
        errors.append("shadow.r must be positive")
    if s.eps <= 0:
        errors.append("shadow.eps must be positive")
    if s.n_mode < 1:
        errors.append(f"shadow.n_mode must be >= 1, got {s.n_mode}")
    if s.ds <= 0:
        errors.append("shadow.ds must be positive")
    if s.eps_min is not None and s.eps_max is not None and s.eps_min >= s.eps_max:
        errors.append("shadow.eps_min must be below shadow.eps_max")
    ok, message = validate_grid(s.n, "shadow.n")
    if not ok:
        errors.append(message)
    return len(errors) == 0, errors


def validate_layer(config: RunConfig) -> Tuple[bool, List[str]]:
    s = config.layer
    errors = []
    if s.r <= 0:
        errors.append("layer.r must be positive")
    if not 0 < s.eps <= 1e-2:
        errors.append(f"layer.eps must be in (0, 1e-2], got {s.eps}")
    if config.model.b1 != 0:
        errors.append("layer runs require model.b1 = 0")
    ok, message = validate_grid(s.n, "layer.n")
    if not ok:
        errors.append(message)
    return len(errors) == 0, errors


def validate_limit(config: RunConfig) -> Tuple[bool, List[str]]:
    s = config.limit
    errors = []
    if s.r < 0:
        errors.append("limit.r must be non-negative")
    if len(s.D1_list) < 3:
        errors.append("limit.D1_list needs at least 3 entries")
    if any(b <= a for a, b in zip(s.D1_list, s.D1_list[1:])):
        errors.append("limit.D1_list must be strictly increasing")
    if s.workers < 1:
        errors.append("limit.workers must be >= 1")
    return len(errors) == 0, errors


COMMAND_CHECKS = {
    "equilibria": (),
    "stability": (),
    "simulate": (validate_time,),
    "continue": (validate_continuation,),
    "shadow-branch": (validate_shadow,),
    "layer": (validate_layer,),
    "verify-shadow-limit": (validate_limit,),
    "verify-all": (),
}


def validate_run(command: str, config: RunConfig) -> None:
    """
    Run every check that applies to a command.

    Raises:
        ConfigValidationError: With all collected messages
    """
    errors: List[str] = []
    ok, model_errors = validate_model(config)
    errors.extend(model_errors)
    ok, message = validate_grid(config.grid.n)
    if not ok:
        errors.append(message)
    if config.stability.k_max < 1:
        errors.append("stability.k_max must be >= 1")
    for check in COMMAND_CHECKS.get(command, ()):
        ok, result = check(config)
        if not ok:
            errors.extend(result if isinstance(result, list) else [result])
    if errors:
        raise ConfigValidationError(errors)
