"""
Deterministic, atomic output writers.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a partial file.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import pandas as pd

from app.experiments.models import ManifestFile, RunManifest

FLOAT_FORMAT = "%.17g"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write text to path via a temporary file and os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _format_frame(frame: pd.DataFrame) -> pd.DataFrame:
    out = frame.copy()
    for column in out.columns:
        if pd.api.types.is_bool_dtype(out[column]):
            out[column] = out[column].map({True: "true", False: "false"})
    return out


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    """CSV text with 17 significant digits, '\\n' endings and true/false booleans."""
    return _format_frame(frame).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(
    path: Path,
    rows: Union[pd.DataFrame, Iterable[Mapping]],
    columns: Sequence[str],
) -> ManifestFile:
    """
    Write rows with exactly the given header.

    Returns:
        ManifestFile entry for the manifest
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=list(columns))
    frame = frame.reindex(columns=list(columns))
    atomic_write_text(path, frame_to_csv_text(frame))
    return ManifestFile(path=Path(path).name, rows=len(frame))


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    """Serialize the manifest as sorted, indented JSON."""
    text = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
    return atomic_write_text(Path(out_dir) / "manifest.json", text)
