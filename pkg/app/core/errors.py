"""
Exception hierarchy for the chemotaxis lab.

Every error carries a message, a details dict and the process exit code the
orchestrator maps it to.
"""

from typing import Any, Dict, List, Optional


class LabError(Exception):
    """Base class for all lab errors."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to a dictionary for serialization."""
        return {
            "type": type(self).__name__,
            "category": self.category,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }

    @property
    def category(self) -> str:
        return "error"

    def get_error_summary(self) -> str:
        """Get a brief summary of the error."""
        return f"{type(self).__name__}: {self.message}"


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    try:
        return float(value)
    except (TypeError, ValueError):
        return repr(value)


# ---------------------------------------------------------------- config (2)


class ConfigError(LabError):
    """Run configuration could not be parsed or validated."""

    exit_code = 2

    @property
    def category(self) -> str:
        return "config"


class UnknownKey(ConfigError):
    def __init__(self, key: str, line: int):
        super().__init__(f"Unknown config key '{key}' at line {line}", key=key, line=line)
        self.key = key
        self.line = line


class ParseError(ConfigError):
    def __init__(self, line: int, text: str, reason: str = "expected 'key = value'"):
        super().__init__(f"Parse error at line {line}: {reason}", line=line, text=text)
        self.line = line
        self.text = text


class ConfigValidationError(ConfigError):
    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors) or "invalid configuration", errors=errors)
        self.errors = errors


# ---------------------------------------------------------------- domain (2)


class DomainError(LabError):
    """Parameters are incompatible with the requested operation."""

    exit_code = 2

    @property
    def category(self) -> str:
        return "domain"


class DivisionByZeroRatio(DomainError):
    pass


class SingularDenominator(DomainError):
    pass


class NoCoexistenceState(DomainError):
    pass


class ZeroSensitivity(DomainError):
    pass


class KZero(DomainError):
    pass


class NZero(DomainError):
    pass


class NoFeasibleMode(DomainError):
    pass


class NoBifurcation(DomainError):
    pass


class BracketMiss(DomainError):
    pass


class ResonanceError(DomainError):
    pass


class OutsideWindow(DomainError):
    pass


class NoEqualArea(DomainError):
    pass


class OutsideI0(DomainError):
    pass


class RTooSmall(DomainError):
    pass


# ------------------------------------------------------------- numerical (3)


class NumericalError(LabError):
    """A solver failed to produce an acceptable result."""

    exit_code = 3

    @property
    def category(self) -> str:
        return "numerical"


class StepRejected(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    """Newton failed. Continuation attaches the points accepted so far."""

    def __init__(self, message: str, branch: Optional[Any] = None, **details: Any):
        super().__init__(message, **details)
        self.branch = branch


# ------------------------------------------------------------- invariant (4)


class InvariantViolation(LabError):
    """A runtime a-priori bound was exceeded."""

    exit_code = 4

    def __init__(self, monitor: str, measured: float, bound: float, t: Optional[float] = None):
        where = f" at t={t:.6g}" if t is not None else ""
        super().__init__(
            f"Invariant '{monitor}' violated{where}: {measured:.17g} exceeds {bound:.17g}",
            monitor=monitor,
            measured=measured,
            bound=bound,
            t=t,
        )
        self.monitor = monitor
        self.measured = measured
        self.bound = bound

    @property
    def category(self) -> str:
        return "invariant"


# -------------------------------------------------------------- internal (1)


class InternalError(LabError):
    """An exception outside the lab hierarchy escaped a command handler."""

    exit_code = 1

    @classmethod
    def wrap(cls, error: Exception) -> "InternalError":
        return cls(f"{type(error).__name__}: {error}", exception=type(error).__name__)

    @property
    def category(self) -> str:
        return "internal"
