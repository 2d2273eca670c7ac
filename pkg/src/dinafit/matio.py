"""File formats: headerless CSV matrices, item-parameter tables, JSON blobs.

Binary matrices serialize as headerless CSV of 0/1 integers with missing
cells as empty fields; float matrices use repr-exact formatting so reruns
are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError
from .model import ItemParams, ResponseMatrix

FLOAT_FMT = "%.17g"


def write_binary_matrix(path, values: np.ndarray, mask: np.ndarray | None = None) -> None:
    values = np.asarray(values)
    lines = []
    for i in range(values.shape[0]):
        cells = [
            "" if (mask is not None and not mask[i, j]) else str(int(values[i, j]))
            for j in range(values.shape[1])
        ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_binary_matrix(path) -> np.ndarray:
    """Strict 0/1 matrix with no missing cells allowed."""
    arr = np.genfromtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if np.isnan(arr).any():
        raise DomainError(f"{path}: empty cells not allowed in this matrix")
    out = arr.astype(np.int8)
    if not np.array_equal(out, arr):
        raise DomainError(f"{path}: entries must be 0 or 1")
    return out


def read_response_matrix(path) -> ResponseMatrix:
    """0/1 matrix where empty fields mean missing."""
    arr = np.genfromtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    missing = np.isnan(arr)
    mask = None if not missing.any() else ~missing
    return ResponseMatrix(np.where(missing, 0, arr), mask=mask)


def write_response_matrix(path, x: ResponseMatrix) -> None:
    write_binary_matrix(path, x.values, x.mask)


def write_float_matrix(path, values: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(values)), delimiter=",", fmt=FLOAT_FMT)


def read_float_matrix(path) -> np.ndarray:
    arr = np.genfromtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if np.isnan(arr).any():
        raise DomainError(f"{path}: empty cells not allowed in a float matrix")
    return arr


def write_item_params(path, params: ItemParams) -> None:
    lines = ["item_id,c,g"]
    for j in range(params.n_items):
        lines.append(f"{j},{params.c[j]!r},{params.g[j]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_item_params(path) -> ItemParams:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != "item_id,c,g":
        raise DomainError(f"{path}: expected header 'item_id,c,g'")
    rows = [line.split(",") for line in text[1:]]
    if any(len(r) != 3 for r in rows):
        raise DimensionError(f"{path}: every row needs item_id,c,g")
    order = np.argsort([int(r[0]) for r in rows])
    c = np.array([float(rows[i][1]) for i in order])
    g = np.array([float(rows[i][2]) for i in order])
    return ItemParams(c, g)


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
