"""
Configuration loader for run files.

Parses `key = value` text into a RunConfig and caches parsed files by
path and modification time.
"""

import logging
import typing
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.core.errors import ConfigValidationError, ParseError, UnknownKey
from app.experiments.models import SECTION_TYPES, RunConfig, split_key

logger = logging.getLogger("run_orchestrator")

NONE_VALUE = "none"


def _known_keys() -> Dict[str, Tuple[str, str, Any]]:
    """Dotted key -> (section, field name, annotation)."""
    keys: Dict[str, Tuple[str, str, Any]] = {"seed": ("", "seed", int)}
    for section, model in SECTION_TYPES.items():
        for name, info in model.model_fields.items():
            keys[f"{section}.{info.alias or name}"] = (section, name, info.annotation)
    return keys


KNOWN_KEYS = _known_keys()


def _base_type(annotation: Any) -> Tuple[Any, bool]:
    """Strip Optional[...]; report whether None is allowed."""
    args = typing.get_args(annotation)
    if typing.get_origin(annotation) is typing.Union and type(None) in args:
        inner = [a for a in args if a is not type(None)]
        return inner[0], True
    return annotation, False


def _convert(raw: str, annotation: Any, line: int, text: str) -> Any:
    base, optional = _base_type(annotation)
    if raw.lower() == NONE_VALUE:
        if not optional:
            raise ParseError(line, text, reason="'none' is only allowed for optional keys")
        return None
    try:
        if typing.get_origin(base) in (list, List):
            (item,) = typing.get_args(base)
            return [_scalar(part.strip(), item) for part in raw.split(",") if part.strip()]
        return _scalar(raw, base)
    except ValueError as e:
        raise ParseError(line, text, reason=str(e)) from e


def _scalar(raw: str, kind: Any) -> Any:
    if kind is int:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got '{raw}'")
        return int(value)
    if kind is float:
        return float(raw)
    return raw


def parse_config(text: str) -> RunConfig:
    """
    Parse configuration text.

    Args:
        text: `key = value` lines; `#` starts a comment

    Returns:
        RunConfig with defaults for every missing key

    Raises:
        UnknownKey: For a key outside the documented set
        ParseError: For a malformed line or value
        ConfigValidationError: If the resolved sections fail validation
    """
    values: Dict[str, Any] = {}
    seen: Dict[str, int] = {}
    warnings: List[str] = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, raw_line)
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ParseError(lineno, raw_line)
        if key not in KNOWN_KEYS:
            raise UnknownKey(key, lineno)
        if key in seen:
            message = f"Duplicate key '{key}' at line {lineno} (first at line {seen[key]}); last value wins"
            logger.warning(message)
            warnings.append(message)
        seen[key] = lineno
        values[key] = _convert(raw, KNOWN_KEYS[key][2], lineno, raw_line)

    sections: Dict[str, Dict[str, Any]] = {}
    seed = 0
    for key, value in values.items():
        if key == "seed":
            seed = value
            continue
        section, field = split_key(key)
        sections.setdefault(section, {})[field] = value

    try:
        built = {name: SECTION_TYPES[name](**data) for name, data in sections.items()}
        config = RunConfig(**built, seed=seed)
    except ValidationError as e:
        raise ConfigValidationError([f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]) from e
    config.warnings.extend(warnings)
    return config


class RunConfigLoader:
    """Loads and caches run configurations."""

    def __init__(self):
        self._config_cache: Dict[Path, RunConfig] = {}
        self._cache_mtimes: Dict[Path, float] = {}

    def load_config(self, path: Optional[Path], force_reload: bool = False) -> RunConfig:
        """
        Load a configuration file; None yields the defaults.

        Raises:
            FileNotFoundError: If the file does not exist
            ConfigError: If the file does not parse
        """
        if path is None:
            return RunConfig()
        path = Path(path).resolve()
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        mtime = path.stat().st_mtime
        if not force_reload and self._cache_mtimes.get(path) == mtime:
            return self._config_cache[path]

        config = parse_config(path.read_text(encoding="utf-8"))
        self._config_cache[path] = config
        self._cache_mtimes[path] = mtime
        return config

    def clear_cache(self):
        """Clear all cached configurations."""
        self._config_cache.clear()
        self._cache_mtimes.clear()


# Global instance for easy access
config_loader = RunConfigLoader()
