import csv
import io
import json
import math
from typing import Any, Iterable, Sequence
from urllib.parse import urlparse

import numpy as np
import requests  # type: ignore


def is_remote(path: str) -> bool:
    return urlparse(path).scheme in ("http", "https")


def fetch_and_parse_file(input_path: str) -> Any:
    """JSON from a local path or an http(s) URL."""
    if is_remote(input_path):
        resp = requests.get(input_path, timeout=30)
        resp.raise_for_status()
        return resp.json()
    with open(input_path) as f:
        return json.load(f)


def format_number(value: Any) -> str:
    """17 significant digits, enough to round-trip any float64."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def jsonable(obj: Any) -> Any:
    """Convert numpy values and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=4)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    return buffer.getvalue()


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    grid = np.geomspace(lo, hi, count)
    grid[0], grid[-1] = lo, hi
    return grid


def tail_decades(start: float, decades: int = 5, per_decade: int = 10) -> np.ndarray:
    """Samples covering `decades` decades above `start`, used by tail probes."""
    return log_grid(start, start * 10.0 ** decades, decades * per_decade + 1)
