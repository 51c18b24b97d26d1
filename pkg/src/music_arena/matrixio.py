"""Matrix containers for ingested embeddings, logits, features and checkpoints.

Two interchangeable on-disk forms are supported:

* Binary: magic bytes ``EMB1``, then row count and column count as unsigned
  32-bit little-endian integers, then ``rows * cols`` 32-bit little-endian
  floats in row-major order.
* Delimited text (for small fixtures): a header row, one clip per line,
  first column the clip id, remaining columns the float values.

Checkpoints store one binary entry per tensor plus a named index file.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")

INDEX_FILENAME = "index.tsv"


def write_matrix(path: str | Path, matrix: np.ndarray) -> None:
    """Write a 2-D array as an ``EMB1`` binary file (stored as float32)."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {arr.shape}")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(arr.tobytes(order="C"))


def read_matrix(path: str | Path) -> np.ndarray:
    """Read an ``EMB1`` binary file into a float32 array of shape (rows, cols)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 4 * rows * cols
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.reshape(rows, cols).copy()


def write_matrix_text(
    path: str | Path, ids: list[str], matrix: np.ndarray, id_header: str = "clip_id"
) -> None:
    """Write the delimited-text form: header row, then one clip per line."""
    arr = np.asarray(matrix, dtype=np.float32)
    if arr.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {arr.shape}")
    if len(ids) != arr.shape[0]:
        raise FormatError(f"{len(ids)} ids for {arr.shape[0]} rows")
    cols = arr.shape[1]
    header = "\t".join([id_header] + [f"c{i}" for i in range(cols)])
    lines = [header]
    for clip_id, row in zip(ids, arr):
        lines.append("\t".join([clip_id] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_text(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read the delimited-text form; returns (clip ids, float32 matrix)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file, expected a header row")
    ids: list[str] = []
    rows: list[list[float]] = []
    width: int | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise FormatError(f"{path}:{lineno}: expected an id and at least one value")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise FormatError(
                f"{path}:{lineno}: expected {width - 1} values, got {len(parts) - 1}"
            )
        ids.append(parts[0])
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    matrix = np.asarray(rows, dtype=np.float32)
    if matrix.size == 0:
        matrix = matrix.reshape(0, (width - 1) if width else 0)
    return ids, matrix


def read_matrix_auto(path: str | Path) -> tuple[list[str] | None, np.ndarray]:
    """Read either container form; text form additionally yields clip ids."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return None, read_matrix(path)
    return read_matrix_text(path)


def save_tensors(directory: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Persist named tensors as one binary entry each plus an index file.

    1-D tensors are stored as single-row matrices and restored flat.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index_lines = []
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        ndim = arr.ndim
        if ndim == 1:
            arr = arr.reshape(1, -1)
        elif ndim != 2:
            raise FormatError(f"tensor {name!r} has unsupported rank {ndim}")
        filename = f"{name}.emb"
        write_matrix(directory / filename, arr)
        index_lines.append(f"{name}\t{filename}\t{ndim}")
    (directory / INDEX_FILENAME).write_text(
        "\n".join(index_lines) + "\n", encoding="utf-8"
    )


def load_tensors(directory: str | Path) -> dict[str, np.ndarray]:
    """Load a tensor checkpoint written by :func:`save_tensors`."""
    directory = Path(directory)
    index_path = directory / INDEX_FILENAME
    if not index_path.exists():
        raise FormatError(f"{directory}: missing {INDEX_FILENAME}")
    tensors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(index_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{index_path}:{lineno}: expected name, file, rank")
        name, filename, rank = parts
        arr = read_matrix(directory / filename)
        if rank == "1":
            arr = arr.reshape(-1)
        tensors[name] = arr
    return tensors
