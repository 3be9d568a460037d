"""
Run artifacts: JSON documents and CSV tables written beside command outputs.
"""
import platform
from importlib import metadata
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

from app.logging_config import setup_logging
from app.schemas.common import Versioned
from app.storage.exceptions import IoError
from app.utils.rng import generator_identity

logger = setup_logging()

MANIFEST_NAME = "manifest.json"
_VERSIONED_PACKAGES = ("learner-transfer", "numpy", "scipy", "pandas", "joblib", "pydantic")


class Manifest(Versioned):
    """Everything needed to rerun a command: parameters, seed and library versions."""

    command: str
    parameters: dict[str, Any]
    seed: int | None = None
    generator: str
    versions: dict[str, str]
    outputs: list[str]


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def library_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    versions.update({name: _version(name) for name in _VERSIONED_PACKAGES})
    return versions


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e


def write_json(model: BaseModel, path: str | Path) -> Path:
    """Dump a pydantic model as indented JSON."""
    path = Path(path)
    _write_text(path, model.model_dump_json(indent=2) + "\n")
    logger.debug(f"Wrote {path}")
    return path


def write_table(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write a table as CSV; floats keep their shortest round-trip form."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path


def write_manifest(
    out_dir: str | Path,
    command: str,
    parameters: dict[str, Any],
    outputs: list[Path],
    seed: int | None = None,
) -> Path:
    """Write manifest.json into `out_dir`, listing output files relative to it."""
    out_dir = Path(out_dir)
    manifest = Manifest(
        command=command,
        parameters=parameters,
        seed=seed,
        generator=generator_identity(),
        versions=library_versions(),
        outputs=sorted(Path(p).name for p in outputs),
    )
    return write_json(manifest, out_dir / MANIFEST_NAME)
