"""
Core logging utilities: handler setup and run identification.
"""

import hashlib
import json
import logging
import os
import uuid
from typing import Any, Dict, Optional

LOG_LEVEL_ENV = "CHEMOTAX_LV_LOG_LEVEL"
_CONFIGURED = False


def generate_run_id() -> str:
    """
    Generate a unique run ID (UUID v4).

    Returns:
        UUID string
    """
    return str(uuid.uuid4())


def config_fingerprint(config: Dict[str, Any]) -> str:
    """
    Hash a resolved configuration for the run manifest.

    Args:
        config: JSON-serialisable configuration mapping

    Returns:
        SHA-256 hex digest of the canonical JSON form
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def resolve_log_level(level: Optional[str] = None) -> int:
    """Map a level name (or the env override) to a logging level."""
    name = (level or os.getenv(LOG_LEVEL_ENV, "WARNING")).upper()
    value = logging.getLevelName(name)
    return value if isinstance(value, int) else logging.WARNING


def configure_logging(level: Optional[str] = None, force: bool = False) -> None:
    """
    Install one root handler, using rich when it is available.

    Args:
        level: Level name; falls back to CHEMOTAX_LV_LOG_LEVEL, then WARNING
        force: Replace an existing configuration
    """
    global _CONFIGURED
    if _CONFIGURED and not force:
        logging.getLogger().setLevel(resolve_log_level(level))
        return

    try:
        from rich.logging import RichHandler

        handler: logging.Handler = RichHandler(show_path=False, rich_tracebacks=False)
        fmt = "%(name)s: %(message)s"
    except ImportError:
        handler = logging.StreamHandler()
        fmt = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    handler.setFormatter(logging.Formatter(fmt))
    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(resolve_log_level(level))
    _CONFIGURED = True
