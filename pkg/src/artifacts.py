"""
Deterministic CSV and JSON artifact writers.

Numbers are written with 17 significant digits so a rerun with the same config and
seeds produces byte-identical files.
"""

import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


class ArtifactError(Exception):
    """Exception for artifact write failures."""
    pass


def format_number(value: Any, digits: int = 17) -> str:
    """Render a CSV cell: integers and strings as-is, floats in scientific notation."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits - 1}e}"
    if value is None:
        return ""
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]],
              digits: int = 17) -> Path:
    """Write rows under a header line; returns the path written."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_number(v, digits) for v in row])
    except OSError as e:
        raise ArtifactError(f"Failed to write {path}: {e}")
    logger.debug(f"Wrote {path}")
    return path


def write_columns(path: PathLike, columns: Dict[str, Sequence[Any]], digits: int = 17) -> Path:
    """Write equal-length named columns as CSV."""
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ArtifactError(f"Columns for {path} have unequal lengths {sorted(lengths)}")
    return write_csv(path, list(columns), zip(*columns.values()), digits)


def _to_jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    """Write sorted, indented JSON; non-finite floats become strings."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(_to_jsonable(data), f, indent=2, sort_keys=True)
            f.write("\n")
    except (OSError, TypeError) as e:
        raise ArtifactError(f"Failed to write {path}: {e}")
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"Failed to read {path}: {e}")


def library_versions() -> Dict[str, str]:
    """Versions recorded in metadata.json."""
    import scipy

    from . import __version__
    return {"thick_control_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def list_files(directory: PathLike) -> List[str]:
    """Sorted relative file names under a directory."""
    root = Path(directory)
    return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())
