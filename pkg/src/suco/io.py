"""Readers and writers for the TEXMEX ``.fvecs`` / ``.bvecs`` / ``.ivecs`` formats.

Each record is a little-endian int32 dimension followed by that many
elements (float32, uint8 or int32). All records in a file share one
dimension.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .core import Dataset
from .errors import ConfigurationError, FormatError, IncompatibilityError

Kind = Literal["f32", "u8", "i32"]
ELEM = {"f32": np.dtype("<f4"), "u8": np.dtype("u1"), "i32": np.dtype("<i4")}
EXTENSIONS = {".fvecs": "f32", ".bvecs": "u8", ".ivecs": "i32"}
MAX_DIM = 2**20


def kind_for(path) -> Kind:
    ext = Path(path).suffix.lower()
    if ext not in EXTENSIONS:
        raise FormatError(f"{path}: unknown vecs extension {ext!r}")
    return EXTENSIONS[ext]


def parse_vecs(raw: bytes, kind: Kind, limit: int | None = None, name: str = "<bytes>") -> np.ndarray:
    """Decode a vecs byte string into an ``(n, dim)`` array.

    ``u8`` widens to float32; ``f32`` and ``i32`` keep their element type.
    """
    elem = ELEM[kind]
    size = len(raw)
    if size < 4:
        raise FormatError(f"{name}: truncated header at byte offset 0 (file has {size} bytes)")
    dim = int(np.frombuffer(raw, dtype="<i4", count=1)[0])
    if dim <= 0 or dim > MAX_DIM:
        raise FormatError(f"{name}: record 0 declares invalid dimension {dim}")
    rec = 4 + dim * elem.itemsize
    full, rest = divmod(size, rec)
    if limit is not None and limit < full:
        full, rest = max(limit, 0), 0

    # uint8 elements make the record stride unaligned for an int32 view,
    # so read the dim column through a byte view.
    block = np.frombuffer(raw, dtype=np.uint8, count=full * rec).reshape(full, rec)
    dims = block[:, :4].copy().view("<i4").reshape(-1)
    bad = np.flatnonzero(dims != dim)
    if len(bad):
        r = int(bad[0])
        raise FormatError(f"{name}: record {r} declares dimension {int(dims[r])}, expected {dim}")
    if rest:
        off = full * rec
        if rest >= 4:
            tail_dim = int(np.frombuffer(raw, dtype="<i4", count=1, offset=off)[0])
            if tail_dim != dim:
                raise FormatError(
                    f"{name}: record {full} declares dimension {tail_dim}, expected {dim}"
                )
        raise FormatError(
            f"{name}: truncated record {full} at byte offset {off} "
            f"({rest} of {rec} bytes present)"
        )
    body = block[:, 4:].copy().view(elem).reshape(full, dim)
    if kind == "u8":
        return body.astype(np.float32)
    return body.astype(elem.newbyteorder("="))


def read_vecs(path, kind: Kind | None = None, limit: int | None = None) -> np.ndarray:
    kind = kind or kind_for(path)
    with open(path, "rb") as fh:
        return parse_vecs(fh.read(), kind, limit, name=os.fspath(path))


def write_vecs(path, kind: Kind, matrix) -> None:
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ConfigurationError(f"expected a 2-d matrix with dim >= 1, got {arr.shape}")
    elem = ELEM[kind]
    if kind == "u8":
        if arr.size and (arr.min() < 0 or arr.max() > 255 or not np.array_equal(arr, np.round(arr))):
            raise ConfigurationError("bvecs values must be integers in [0, 255]")
    n, dim = arr.shape
    out = np.empty((n, 4 + dim * elem.itemsize), dtype=np.uint8)
    out[:, :4] = np.frombuffer(np.int32(dim).astype("<i4").tobytes(), dtype=np.uint8)
    out[:, 4:] = np.ascontiguousarray(arr.astype(elem)).view(np.uint8).reshape(n, -1)
    with open(path, "wb") as fh:
        fh.write(out.tobytes())


def load_dataset(path, limit: int | None = None) -> Dataset:
    kind = kind_for(path)
    if kind == "i32":
        raise FormatError(f"{path}: ivecs holds ids, not a vector dataset")
    return Dataset(read_vecs(path, kind, limit))


def load_queries(path, d: int | None = None) -> np.ndarray:
    q = read_vecs(path).astype(np.float32)
    if d is not None and q.shape[1] != d:
        raise IncompatibilityError(f"{path}: queries have d={q.shape[1]}, dataset has d={d}")
    return q


@dataclass(frozen=True, eq=False)
class HoldOut:
    base: Dataset
    queries: np.ndarray
    query_ids: np.ndarray  # original ids of the held-out rows
    base_ids: np.ndarray  # original id of every row of ``base``


def hold_out_queries(dataset: Dataset, count: int, seed: int = 0) -> HoldOut:
    """Remove ``count`` random points from ``dataset`` and return them as queries."""
    if count < 0:
        raise ConfigurationError(f"count must be >= 0, got {count}")
    if count >= dataset.n:
        raise ConfigurationError(
            f"holding out {count} of {dataset.n} points would leave an empty dataset"
        )
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(dataset.n, size=count, replace=False)).astype(np.int64)
    keep = np.ones(dataset.n, dtype=bool)
    keep[picked] = False
    base_ids = np.flatnonzero(keep)
    return HoldOut(
        base=Dataset(dataset.data[base_ids]),
        queries=dataset.data[picked].copy(),
        query_ids=picked,
        base_ids=base_ids,
    )
