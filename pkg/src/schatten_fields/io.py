"""JSON and CSV serialization with schema validation and atomic writes.

Complex numbers are stored as ``[re, im]`` pairs. Every document carries a
``schema_version``; floats use the shortest round-trip representation.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .base import Grid, ScalarField
from .errors import ConfigError
from .opfield import OperatorField, VectorField

SCHEMA_VERSION = 1

_NUMBER_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_GRID_PROPERTIES = {
    "schema_version": {"const": SCHEMA_VERSION},
    "points": {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
    "adjacency": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}},
    "distances": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}},
    "compactified": {"type": "boolean"},
    "infinity_index": {"type": ["integer", "null"], "minimum": 0},
}

GRID_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "points", "adjacency"],
    "properties": _GRID_PROPERTIES,
}

SCALAR_FIELD_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "points", "adjacency", "values"],
    "properties": {**_GRID_PROPERTIES, "values": {"type": "array", "items": _NUMBER_PAIR}},
}

OPERATOR_FIELD_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "points", "adjacency", "dim", "matrices"],
    "properties": {
        **_GRID_PROPERTIES,
        "kind": {"const": "operator_field"},
        "dim": {"type": "integer", "minimum": 1},
        "matrices": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": _NUMBER_PAIR}},
        },
    },
}

VECTOR_FIELD_SCHEMA = {
    "type": "object",
    "required": ["dim", "vectors"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "vectors": {"type": "array", "items": {"type": "array", "items": _NUMBER_PAIR}},
    },
}

FRAME_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "label", "grid", "projection", "elements"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "label": {"type": "string"},
        "grid": GRID_SCHEMA,
        "projection": {"type": "array"},
        "elements": {"type": "array", "items": VECTOR_FIELD_SCHEMA},
    },
}


def _pairs(a: np.ndarray):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _from_pairs(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def validate(doc: dict, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid {what}: {exc.message}") from exc


def grid_to_json(grid: Grid) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "points": grid.points.tolist(),
        "adjacency": grid.adjacency.tolist(),
        "distances": grid.distances.tolist(),
    }
    if grid.compactified:
        doc["compactified"] = True
        doc["infinity_index"] = int(grid.infinity_index)
    return doc


def grid_from_json(doc: dict) -> Grid:
    validate(doc, GRID_SCHEMA, "grid")
    try:
        return Grid(
            np.asarray(doc["points"], dtype=float),
            np.asarray(doc["adjacency"], dtype=np.int64).reshape(-1, 2),
            None if "distances" not in doc else np.asarray(doc["distances"], dtype=float),
            bool(doc.get("compactified", False)),
            doc.get("infinity_index"),
        )
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc


def scalar_field_to_json(a: ScalarField) -> dict:
    return {**grid_to_json(a.grid), "values": _pairs(a.values)}


def scalar_field_from_json(doc: dict) -> ScalarField:
    validate(doc, SCALAR_FIELD_SCHEMA, "scalar field")
    grid = grid_from_json({k: v for k, v in doc.items() if k != "values"})
    try:
        return ScalarField(grid, _from_pairs(doc["values"]))
    except ValueError as exc:
        raise ConfigError(f"invalid scalar field: {exc}") from exc


def operator_field_to_json(T: OperatorField) -> dict:
    return {**grid_to_json(T.grid), "kind": "operator_field", "dim": T.dim, "matrices": _pairs(T.matrices)}


def operator_field_from_json(doc: dict) -> OperatorField:
    validate(doc, OPERATOR_FIELD_SCHEMA, "operator field")
    grid = grid_from_json({k: v for k, v in doc.items() if k in _GRID_PROPERTIES})
    try:
        mats = _from_pairs(doc["matrices"])
        if mats.shape != (grid.size, doc["dim"], doc["dim"]):
            raise ValueError(f"matrices have shape {mats.shape}, expected ({grid.size}, {doc['dim']}, {doc['dim']})")
        return OperatorField(grid, mats)
    except ValueError as exc:
        raise ConfigError(f"invalid operator field: {exc}") from exc


def frame_to_json(frame) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": frame.module.label,
        "grid": grid_to_json(frame.grid),
        "projection": _pairs(frame.module.projection.matrices),
        "elements": [{"dim": e.dim, "vectors": _pairs(e.vectors)} for e in frame.elements],
    }


def frame_from_json(doc: dict):
    from .frames import Frame, ModuleSpec

    validate(doc, FRAME_SCHEMA, "frame")
    grid = grid_from_json(doc["grid"])
    try:
        spec = ModuleSpec(OperatorField(grid, _from_pairs(doc["projection"])), doc["label"])
        elems = tuple(VectorField(grid, _from_pairs(e["vectors"])) for e in doc["elements"])
        return Frame(elems, spec)
    except ValueError as exc:
        raise ConfigError(f"invalid frame: {exc}") from exc


def read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {path}: {exc}") from exc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc) -> None:
    atomic_write_text(path, dumps(doc))


def format_number(v) -> str:
    """Shortest round-trip decimal for a real number."""
    return repr(float(v))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, (str, int, np.integer)) else format_number(c) for c in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def scalar_field_csv(a: ScalarField) -> str:
    """One row per grid point: index, real part, imaginary part."""
    return csv_text(["x_index", "re", "im"], ((i, v.real, v.imag) for i, v in enumerate(np.asarray(a.values, dtype=complex))))
