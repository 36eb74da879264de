"""Matrix / model-spec JSON, schema validation and deterministic CSV output."""

from __future__ import annotations

import csv
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .errors import DimensionError


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("robustsym").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, schema: str) -> None:
    """Raise ``jsonschema.ValidationError`` (a ``ValueError``-like failure) on mismatch."""
    jsonschema.validate(obj, load_schema(schema))


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        validate(obj, "matrix")
    except jsonschema.ValidationError as exc:
        raise ValueError(f"invalid matrix JSON: {exc.message}") from None
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    n = obj["dim"]
    if re.shape != (n, n) or im.shape != (n, n):
        raise DimensionError(f"matrix JSON declares dim {n} but holds {re.shape} / {im.shape}")
    return re + 1j * im


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))


def write_matrix(path, A) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(A)))


def read_model_spec(path) -> dict:
    spec = json.loads(Path(path).read_text())
    try:
        validate(spec, "model_spec")
    except jsonschema.ValidationError as exc:
        raise ValueError(f"invalid model spec: {exc.message}") from None
    return spec


def format_value(x) -> str:
    """17 significant digits in scientific notation; booleans and ints verbatim."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.16e}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError("CSV row length does not match header")
            w.writerow([format_value(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (frozenset, set)):
        return sorted(_jsonable(v) for v in obj)
    return obj


def write_json(path, obj, schema: str | None = None) -> dict:
    """Validate (if a schema is named) and write with sorted keys. Non-finite floats become null."""
    clean = _jsonable(obj)
    if schema is not None:
        validate(clean, schema)
    Path(path).write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n")
    return clean
