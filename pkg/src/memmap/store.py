"""Versioned JSON persistence for fitted models (``.mmj`` files).

Layout (keys always in this order)::

    {"format_version": 1, "n", "p", "M", "N", "nu", "sigma2", "sigma_x2",
     "w": [n], "a": [M*n row-major], "alpha": [M*p row-major], "B": [M*N] (optional)}

Floats are written with 17 significant digits, which round-trips doubles
exactly, so save -> load -> save reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .errors import InvalidArgumentError, ModelFormatError, VersionError
from .model import ModelParams

FORMAT_VERSION = 1
_INT_KEYS = ("n", "p", "M", "N")
_FLOAT_KEYS = ("nu", "sigma2", "sigma_x2")


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"cannot serialize non-finite value {x}")
    s = "%.17g" % x
    # keep floats recognisable as floats
    if all(ch not in s for ch in ".eE"):
        s += ".0"
    return s


def _array(values) -> str:
    return "[" + ", ".join(_num(v) for v in np.asarray(values).reshape(-1)) + "]"


def dumps(model: ModelParams, store_b: bool = True) -> str:
    model.validate()
    parts = [f'"format_version": {FORMAT_VERSION}']
    parts += [f'"{k}": {int(getattr(model, k))}' for k in _INT_KEYS]
    parts += [f'"{k}": {_num(getattr(model, k))}' for k in _FLOAT_KEYS]
    parts.append(f'"w": {_array(model.w)}')
    parts.append(f'"a": {_array(model.a)}')
    parts.append(f'"alpha": {_array(model.alpha)}')
    if store_b and model.B is not None:
        parts.append(f'"B": {_array(model.B)}')
    return "{\n  " + ",\n  ".join(parts) + "\n}\n"


def save(model: ModelParams, path, store_b: bool = True) -> None:
    text = dumps(model, store_b=store_b)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write model file {os.fspath(path)!r}: {exc.strerror}") from exc


def _get(doc: dict, key: str, kind):
    if key not in doc:
        raise ModelFormatError(f"missing key {key!r}")
    v = doc[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ModelFormatError(f"key {key!r} must be a positive integer, got {v!r}")
        return v
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ModelFormatError(f"key {key!r} must be a finite number, got {v!r}")
        return float(v)
    return v


def _matrix(doc: dict, key: str, rows: int, cols: int) -> np.ndarray:
    v = _get(doc, key, list)
    if not isinstance(v, list) or len(v) != rows * cols:
        raise ModelFormatError(f"key {key!r} must be a list of {rows * cols} numbers")
    if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ModelFormatError(f"key {key!r} contains a non-numeric entry")
    arr = np.asarray(v, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(f"key {key!r} contains non-finite values")
    return arr


def loads(text: str) -> ModelParams:
    try:
        doc = json.loads(text)  # NaN/Infinity parse, then fail per-key validation
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    n, p, M, N = (_get(doc, k, int) for k in _INT_KEYS)
    nu, sigma2, sigma_x2 = (_get(doc, k, float) for k in _FLOAT_KEYS)
    w = _matrix(doc, "w", 1, n)[0]
    a = _matrix(doc, "a", M, n)
    alpha = _matrix(doc, "alpha", M, p)
    B = _matrix(doc, "B", M, N) if "B" in doc else None
    try:
        return ModelParams(alpha=alpha, w=w, a=a, sigma2=sigma2, sigma_x2=sigma_x2,
                           nu=nu, N=N, B=B)
    except InvalidArgumentError as exc:
        raise ModelFormatError(f"invalid model: {exc}") from exc


def load(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
