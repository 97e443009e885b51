"""
Output path helpers for chemotax-lv.

Keeps output directory resolution consistent across the CLI and the runner.
"""

import os
from pathlib import Path
from typing import Optional

OUT_ENV = "CHEMOTAX_LV_OUT"
DEFAULT_OUT_DIRNAME = "chemotax_out"


def ensure_env_loaded() -> None:
    """Load a .env file from the working directory when python-dotenv is installed."""
    try:
        from dotenv import load_dotenv

        load_dotenv()
    except ImportError:
        pass


def get_default_out_dir() -> Path:
    """Return the output directory used when neither --out nor the env var is set."""
    return Path.cwd() / DEFAULT_OUT_DIRNAME


def _is_writable_dir(path: Path, create: bool) -> bool:
    """Best-effort check if a directory is writable (and deletable)."""
    try:
        if create:
            path.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            return False
        test_file = path / ".chemotax_lv_write_test"
        with open(test_file, "w", encoding="utf-8") as handle:
            handle.write("ok")
        test_file.unlink()
        return True
    except Exception:
        return False


def resolve_out_dir(out: Optional[str] = None) -> Path:
    """
    Resolve the output directory.

    Order: explicit argument, CHEMOTAX_LV_OUT, ./chemotax_out.

    Raises:
        OSError: If the chosen directory cannot be created or written
    """
    if out:
        path = Path(out)
    elif os.getenv(OUT_ENV):
        path = Path(os.environ[OUT_ENV])
    else:
        path = get_default_out_dir()
    path = path.expanduser().resolve()
    if not _is_writable_dir(path, create=True):
        raise OSError(f"Output directory is not writable: {path}")
    return path
