"""CSV and JSON I/O with round-trip-exact float formatting."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import DataError
from .simulate import SampleSet


def fmt(v) -> str:
    """Shortest string that parses back to the same float (``repr``)."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except UnicodeDecodeError:
        raise DataError(f"{path} is not a text CSV file") from None
    if not rows:
        raise DataError(f"{path} is empty")
    return [c.strip() for c in rows[0]], rows[1:]


def _float_column(path, header, rows, name) -> np.ndarray:
    if name not in header:
        raise DataError(f"{path}: missing column {name!r} (header {header})")
    j = header.index(name)
    try:
        return np.array([float(r[j]) for r in rows])
    except (ValueError, IndexError):
        raise DataError(f"{path}: column {name!r} has a non-numeric or missing entry") from None


def read_sample_csv(path, domain_length: float | None = None) -> SampleSet:
    """Read an ``s,x`` CSV.

    Without ``domain_length`` the window is ``[0, ceil(max s)]``.
    """
    header, rows = read_table(path)
    if not rows:
        raise DataError(f"{path} has a header but no observations")
    s = _float_column(path, header, rows, "s")
    x = _float_column(path, header, rows, "x")
    if domain_length is None:
        domain_length = float(math.ceil(s.max())) if s.size and s.max() > 0 else 1.0
    return SampleSet(s, x, domain_length)


def write_sample_csv(path, sample: SampleSet) -> Path:
    return write_table(path, ["s", "x"], zip(sample.locations, sample.values))


def read_column(path, name: str) -> np.ndarray:
    header, rows = read_table(path)
    return _float_column(path, header, rows, name)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from None
