"""
Artifact bundle layout (one directory per run, overwritten in place):

    config.ini          canonical config echo
    diagnostics.csv     per-snapshot series
    modulus.csv         modulus estimates (when enabled)
    modulus_pairs.csv   pair-level dump (modulus.dump_pairs)
    bound_fit.json      envelope fit, or the reason it could not be fitted
    verification.json   area-flux and graph-evolution reports
    abort.json          reason and time of an abnormal end
    checkpoints/*.flck  solver checkpoints
    manifest.json       format version, code version, wall clock, file list

CSV files start with a "# format_version: N" line; JSON records carry a
format_version key.
"""
import json
import logging
import shutil
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger("bundle")

FORMAT_VERSION = 1
CODE_VERSION = "1.0.0"
ARTIFACTS = (
    "config.ini",
    "diagnostics.csv",
    "modulus.csv",
    "modulus_pairs.csv",
    "bound_fit.json",
    "verification.json",
    "abort.json",
    "manifest.json",
)


def _json_default(value: Any) -> Any:
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {value.__class__.__name__} is not JSON serializable")


def _json_dumps(value: Any) -> str:
    return json.dumps(value, default=_json_default, indent=2, sort_keys=True, allow_nan=True)


def prepare_bundle(path: Union[str, Path]) -> Path:
    """Create the directory and clear artifacts left by an earlier run."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for name in ARTIFACTS:
        (path / name).unlink(missing_ok=True)
    shutil.rmtree(path / "checkpoints", ignore_errors=True)
    return path


def write_text(path: Union[str, Path], name: str, text: str) -> Path:
    target = Path(path) / name
    target.write_text(text, encoding="utf-8")
    return target


def write_record(path: Union[str, Path], name: str, record: Dict[str, Any]) -> Path:
    target = Path(path) / name
    payload = {"format_version": FORMAT_VERSION, **record}
    target.write_text(_json_dumps(payload) + "\n", encoding="utf-8")
    return target


def write_series(path: Union[str, Path], name: str, frame: pd.DataFrame) -> Path:
    target = Path(path) / name
    with target.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# format_version: {FORMAT_VERSION}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", na_rep="", lineterminator="\n")
    return target


def write_manifest(path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    files = sorted(
        str(p.relative_to(path)) for p in path.rglob("*") if p.is_file() and p.name != "manifest.json"
    )
    manifest = {
        "code_version": CODE_VERSION,
        "wall_clock": datetime.now(timezone.utc),
        "files": files,
        **(extra or {}),
    }
    target = write_record(path, "manifest.json", manifest)
    logger.info("bundle written: %s (%d files)", path, len(files) + 1)
    return target


def read_record(path: Union[str, Path], name: str) -> Optional[Dict[str, Any]]:
    target = Path(path) / name
    if not target.exists():
        return None
    return json.loads(target.read_text(encoding="utf-8"))


def read_series(path: Union[str, Path], name: str) -> Optional[pd.DataFrame]:
    target = Path(path) / name
    if not target.exists():
        return None
    return pd.read_csv(target, comment="#")


def checkpoint_dir(path: Union[str, Path]) -> Path:
    target = Path(path) / "checkpoints"
    target.mkdir(parents=True, exist_ok=True)
    return target


def list_checkpoints(path: Union[str, Path]) -> Iterable[Path]:
    return sorted((Path(path) / "checkpoints").glob("*.flck"))
