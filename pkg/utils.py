"""
Utility functions for the photon gun simulator: JSON/CSV export helpers.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np


def to_jsonable(data: Any) -> Any:
    """
    Convert numpy scalars/arrays, pydantic models and tuples to plain JSON types.

    Args:
        data: Object to convert

    Returns:
        Structure of dict/list/str/int/float/bool/None
    """
    if hasattr(data, "model_dump"):
        return to_jsonable(data.model_dump(by_alias=True))
    if isinstance(data, dict):
        return {str(key): to_jsonable(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_jsonable(item) for item in data]
    if isinstance(data, np.ndarray):
        return to_jsonable(data.tolist())
    if isinstance(data, np.generic):
        return to_jsonable(data.item())
    if isinstance(data, float) and not np.isfinite(data):
        return None
    if isinstance(data, complex):
        return {"re": data.real, "im": data.imag}
    if isinstance(data, Path):
        return str(data)
    return data


def safe_json_dumps(data: Any, default: str = "{}") -> str:
    """
    Serialize to JSON with sorted keys (byte-stable across runs).

    Returns:
        JSON string or default if serialization fails
    """
    try:
        return json.dumps(to_jsonable(data), sort_keys=True, indent=2, allow_nan=False)
    except (TypeError, ValueError):
        return default


def format_float(value: Any) -> str:
    """Round-trip-safe text for a number; None becomes an empty field."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a CSV file whose first line is a '#'-prefixed JSON metadata comment.

    Args:
        path: Output file
        columns: Header names
        rows: Row tuples
        metadata: Resolved configuration and provenance

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if metadata is not None:
            handle.write("# " + json.dumps(to_jsonable(metadata), sort_keys=True) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(value) for value in row])
    return path


def read_csv(path: Path):
    """
    Read a file written by write_csv.

    Returns:
        (metadata dict or None, header list, rows as lists of strings)
    """
    with Path(path).open(encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    metadata = None
    if lines and lines[0].startswith("# "):
        metadata = json.loads(lines[0][2:])
        lines = lines[1:]
    reader = list(csv.reader(lines))
    return metadata, reader[0], reader[1:]


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(safe_json_dumps(data, default="null") + "\n", encoding="utf-8")
    return path
