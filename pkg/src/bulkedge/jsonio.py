"""Helpers for the JSON encodings of complex scalars and matrices."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError


def encode_matrix(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def decode_matrix(obj: Any, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Decode ``{"re": [[...]], "im": [[...]]}``; a bare nested list is read as real."""
    if isinstance(obj, dict):
        if "re" not in obj:
            raise FormatError("matrix object needs an 're' field")
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise FormatError(f"re/im shape mismatch: {re.shape} vs {im.shape}")
        m = re + 1j * im
    else:
        m = np.asarray(obj, dtype=complex)
    if shape is not None and m.shape != tuple(shape):
        raise FormatError(f"expected matrix of shape {shape}, got {m.shape}")
    return m


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(obj: Any) -> complex:
    if isinstance(obj, (list, tuple)):
        if len(obj) != 2:
            raise FormatError("complex numbers are encoded as [re, im]")
        return complex(float(obj[0]), float(obj[1]))
    if isinstance(obj, dict):
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    return complex(obj)


def dumps(payload: Any) -> str:
    # sorted keys + fixed indent keep reports byte-identical between runs
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(dumps(payload), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
