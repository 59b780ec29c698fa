"""JSON wire formats for matrices, channels, families, and collision specs.

Matrix format: ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` with the
entries in row-major order.  Floats go through :func:`json.dumps`, which
writes the shortest repr that re-parses to the identical double.
"""
import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from .qmat import MatrixError

SCHEMA = "stabchan/1"


class FormatError(ValueError):
    """Malformed JSON document or a document that violates its schema."""


def _require(doc, key, kind):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"missing field {key!r}")
    value = doc[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise FormatError(f"field {key!r} must be an integer, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise FormatError(f"field {key!r} must be a list")
    return value


def matrix_to_json(m) -> Dict[str, Any]:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    rows, cols = arr.shape
    data = [[float(z.real), float(z.imag)] for z in arr.ravel()]
    return {"rows": rows, "cols": cols, "data": data}


def matrix_from_json(doc) -> np.ndarray:
    rows = _require(doc, "rows", int)
    cols = _require(doc, "cols", int)
    data = _require(doc, "data", list)
    if rows < 1 or cols < 1:
        raise FormatError(f"rows and cols must be positive, got {rows}x{cols}")
    if len(data) != rows * cols:
        raise FormatError(f"expected {rows * cols} entries for a {rows}x{cols} matrix, "
                          f"got {len(data)}")
    out = np.empty(rows * cols, dtype=complex)
    for k, entry in enumerate(data):
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                           for x in entry)):
            raise FormatError(f"entry {k} must be a [re, im] pair of numbers, got {entry!r}")
        out[k] = complex(entry[0], entry[1])
    if not np.all(np.isfinite(out)):
        raise FormatError("matrix has non-finite entries")
    return out.reshape(rows, cols)


def channel_to_json(choi) -> Dict[str, Any]:
    return {"choi": matrix_to_json(choi.mat), "d_out": choi.d_out, "d_in": choi.d_in}


def channel_from_json(doc):
    from .channel import ChoiMatrix

    mat = matrix_from_json(_require(doc, "choi", dict))
    d_out = _require(doc, "d_out", int)
    d_in = _require(doc, "d_in", int)
    try:
        return ChoiMatrix(mat, d_out, d_in)
    except MatrixError as exc:
        raise FormatError(str(exc)) from exc


def kraus_to_json(kraus) -> Dict[str, Any]:
    return {"kraus": [matrix_to_json(k) for k in kraus.operators]}


def kraus_from_json(doc):
    from .channel import KrausSet

    ops = [matrix_from_json(k) for k in _require(doc, "kraus", list)]
    try:
        return KrausSet(ops)
    except MatrixError as exc:
        raise FormatError(str(exc)) from exc


def family_to_json(sigma, b) -> Dict[str, Any]:
    return {"sigma": matrix_to_json(sigma), "B": matrix_to_json(b)}


def family_from_json(doc):
    return (matrix_from_json(_require(doc, "sigma", dict)),
            matrix_from_json(_require(doc, "B", dict)))


def collision_to_json(spec) -> Dict[str, Any]:
    return {"S": matrix_to_json(spec.S), "rho_X": matrix_to_json(spec.rho_X), "d_Y": spec.d_Y}


def collision_from_json(doc):
    from .scattering import CollisionSpec

    s = matrix_from_json(_require(doc, "S", dict))
    rho_x = matrix_from_json(_require(doc, "rho_X", dict))
    d_y = _require(doc, "d_Y", int)
    return CollisionSpec(s, rho_x, d_y)


def load_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc


def dump_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def real_list(doc, name: str = "values") -> List[float]:
    if not isinstance(doc, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in doc):
        raise FormatError(f"{name} must be a JSON list of numbers")
    return [float(x) for x in doc]
