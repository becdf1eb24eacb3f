"""Feature vector utilities and the shared on-disk vector formats.

Two interchangeable formats are supported:

* binary: little-endian header ``u32 count, u32 dim`` followed by
  ``count * dim`` float32 values, row-major;
* text: one vector per line, space-separated decimals.

Files with a ``.txt`` extension are parsed as text, everything else as
binary. Both load to the same vectors within 1e-6.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np


class VectorError(ValueError):
    """Raised for malformed, non-finite or zero vectors."""


def as_vector(values) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting non-finite components."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise VectorError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise VectorError("vector has non-finite components")
    return v


def l2_normalize(values) -> np.ndarray:
    """Scale a vector to unit L2 norm. Zero vectors are rejected."""
    v = as_vector(values)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise VectorError("cannot normalize the zero vector")
    return v / norm


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; any zero row is rejected."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    if not np.all(np.isfinite(m)):
        raise VectorError("matrix has non-finite components")
    if np.any(norms == 0.0):
        raise VectorError("matrix has a zero row")
    return m / norms[:, None]


_HEADER = struct.Struct("<II")


def write_vectors(path, matrix: np.ndarray) -> None:
    """Write a (count, dim) array in the binary vector format."""
    m = np.asarray(matrix, dtype=np.float32)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    count, dim = m.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(count, dim))
        fh.write(m.astype("<f4").tobytes())


def write_vectors_text(path, matrix: np.ndarray) -> None:
    """Write vectors in the text format, one per line."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w") as fh:
        for row in m:
            fh.write(" ".join("%.9g" % x for x in row))
            fh.write("\n")


def read_vectors(path) -> np.ndarray:
    """Load a vector file (binary or text) as a (count, dim) float64 array."""
    path = Path(path)
    if not path.exists():
        raise VectorError(f"vector file not found: {path}")
    if path.suffix == ".txt":
        return _read_text(path)
    return _read_binary(path)


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise VectorError(f"{path}: truncated header")
    count, dim = _HEADER.unpack_from(raw)
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise VectorError(
            f"{path}: expected {count}x{dim} float32 payload "
            f"({expected} bytes), file has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.astype(np.float64).reshape(count, dim)


def _read_text(path: Path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise VectorError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise VectorError(f"{path}: empty vector file")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise VectorError(f"{path}: inconsistent row lengths {sorted(dims)}")
    return np.asarray(rows, dtype=np.float64)
