"""Per-subspace inverted multi-index: two half-space codebooks and a CSR cell table.

Index file layout (all little-endian)::

    magic      b"SUCO"
    version    u32
    header     n u64, d u32, num_subspaces u32, k_half u32, iters u32,
               seed u64, mode u8 (0 contiguous, 1 shuffled)
    layout     per subspace: size u32, half_split u32, size x u32 dims
    subspaces  per subspace: first-half centroids  k_half x h1 f32,
               second-half centroids k_half x h2 f32,
               offsets (k_half^2 + 1) u64, point ids n u32

The dataset itself is not stored; it is needed at query time for re-ranking.
"""

from __future__ import annotations

import io
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Dataset
from .errors import ConfigurationError, CorruptIndexError, IncompatibilityError
from .kmeans import KMeansModel, kmeans
from .subspace import MODES, Mode, SubspaceLayout, sample_subspaces

MAGIC = b"SUCO"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<QIIIIQB")
_HALF_TAGS = (1, 2)


@dataclass(eq=False)
class Imi:
    """Cells of the ``k_half x k_half`` grid in CSR form.

    Cell ``(c1, c2)`` lives at flat position ``c1 * k_half + c2`` and holds
    ``ids[offsets[c]:offsets[c + 1]]`` in ascending id order.
    """

    k_half: int
    offsets: np.ndarray  # (k_half**2 + 1,) uint64
    ids: np.ndarray  # (n,) uint32

    @classmethod
    def from_assignments(cls, first: np.ndarray, second: np.ndarray, k_half: int) -> "Imi":
        joint = first.astype(np.int64) * k_half + second.astype(np.int64)
        order = np.argsort(joint, kind="stable")
        counts = np.bincount(joint, minlength=k_half * k_half)
        offsets = np.zeros(k_half * k_half + 1, dtype=np.uint64)
        np.cumsum(counts, out=offsets[1:])
        return cls(k_half=k_half, offsets=offsets, ids=order.astype(np.uint32))

    @property
    def n(self) -> int:
        return len(self.ids)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets.astype(np.int64))

    def cell_sizes(self) -> np.ndarray:
        return self.sizes.copy()

    def gather(self, flat_cells: np.ndarray) -> np.ndarray:
        """Concatenated ids of the given flat cell numbers, in that order."""
        flat_cells = np.asarray(flat_cells, dtype=np.int64)
        lens = self.sizes[flat_cells]
        starts = self.offsets[flat_cells].astype(np.int64)
        total = int(lens.sum())
        if total == 0:
            return np.empty(0, dtype=np.uint32)
        # position p of the output maps to starts[cell] + (p - first output slot of cell)
        shift = np.repeat(starts - (np.cumsum(lens) - lens), lens)
        return self.ids[np.arange(total) + shift]

    def cell(self, c1: int, c2: int) -> np.ndarray:
        c = c1 * self.k_half + c2
        return self.ids[int(self.offsets[c]) : int(self.offsets[c + 1])]

    def assignments(self) -> tuple[np.ndarray, np.ndarray]:
        """Recover the per-point (first, second) cluster ids from the cells."""
        joint = np.empty(self.n, dtype=np.int64)
        cells = np.repeat(np.arange(self.k_half * self.k_half), self.cell_sizes())
        joint[self.ids.astype(np.int64)] = cells
        return (joint // self.k_half).astype(np.int32), (joint % self.k_half).astype(np.int32)

    def check_partition(self) -> None:
        """Raise AssertionError unless every id 0..n-1 appears exactly once."""
        offs = self.offsets.astype(np.int64)
        assert offs[0] == 0 and offs[-1] == self.n, "offsets do not span the id array"
        assert np.all(np.diff(offs) >= 0), "offsets decrease"
        seen = np.bincount(self.ids.astype(np.int64), minlength=self.n)
        assert len(seen) == self.n and np.all(seen == 1), "ids are not a permutation"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Imi):
            return NotImplemented
        return (
            self.k_half == other.k_half
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.ids, other.ids)
        )


@dataclass(eq=False)
class SubspaceIndex:
    first: KMeansModel
    second: KMeansModel
    imi: Imi


@dataclass(eq=False)
class SucoIndex:
    layout: SubspaceLayout
    n: int
    k_half: int
    iters: int
    seed: int
    parts: list[SubspaceIndex]

    @property
    def d(self) -> int:
        return self.layout.d

    @property
    def num_subspaces(self) -> int:
        return self.layout.num_subspaces

    def centroid_floats(self) -> int:
        return sum(p.first.centroids.size + p.second.centroids.size for p in self.parts)

    def nbytes(self) -> int:
        """In-memory footprint of centroids, offsets and id lists."""
        return sum(
            p.first.centroids.nbytes + p.second.centroids.nbytes
            + p.imi.offsets.nbytes + p.imi.ids.nbytes
            for p in self.parts
        )

    def check_compatible(self, dataset: Dataset) -> None:
        if dataset.n != self.n or dataset.d != self.d:
            raise IncompatibilityError(
                f"index built for n={self.n}, d={self.d}; dataset has n={dataset.n}, d={dataset.d}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, SucoIndex):
            return NotImplemented
        return (
            self.layout == other.layout
            and (self.n, self.k_half, self.iters, self.seed)
            == (other.n, other.k_half, other.iters, other.seed)
            and len(self.parts) == len(other.parts)
            and all(
                a.first == b.first and a.second == b.second and a.imi == b.imi
                for a, b in zip(self.parts, other.parts)
            )
        )


def derive_seed(seed: int, subspace: int, half_tag: int) -> int:
    """Independent 64-bit stream per (subspace, half) from the user seed."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), subspace, half_tag])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _build_subspace(data: np.ndarray, layout: SubspaceLayout, i: int, k_half: int,
                    iters: int, seed: int) -> SubspaceIndex:
    models = [
        kmeans(data[:, layout.dims(i, half)], k_half, iters, derive_seed(seed, i, tag))
        for half, tag in zip(("first", "second"), _HALF_TAGS)
    ]
    imi = Imi.from_assignments(models[0].assignments, models[1].assignments, k_half)
    return SubspaceIndex(models[0], models[1], imi)


def build_index(
    dataset: Dataset,
    num_subspaces: int = 8,
    k_half: int = 50,
    iters: int = 10,
    seed: int = 0,
    mode: Mode = "contiguous",
    threads: int = 1,
) -> SucoIndex:
    """Cluster both halves of every subspace and assemble one IMI per subspace.

    Subspaces are independent, so ``threads > 1`` builds them concurrently;
    the result does not depend on the thread count.
    """
    if k_half < 1 or dataset.n < k_half:
        raise ConfigurationError(f"need n >= k_half >= 1, got n={dataset.n}, k_half={k_half}")
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must be a non-negative 64-bit integer, got {seed}")
    if k_half * k_half + 1 > 2**32 or dataset.n >= 2**32:
        raise ConfigurationError("index limited to n < 2^32 points")
    layout = sample_subspaces(dataset.d, num_subspaces, mode, seed)
    data = dataset.data
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda i: _build_subspace(data, layout, i, k_half, iters, seed),
                range(num_subspaces),
            ))
    else:
        parts = [_build_subspace(data, layout, i, k_half, iters, seed)
                 for i in range(num_subspaces)]
    return SucoIndex(layout=layout, n=dataset.n, k_half=k_half, iters=iters,
                     seed=seed, parts=parts)


def to_bytes(index: SucoIndex) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    buf.write(_HEADER.pack(index.n, index.d, index.num_subspaces, index.k_half,
                           index.iters, index.seed & (2**64 - 1),
                           MODES.index(index.layout.mode)))
    for dims, split in zip(index.layout.subspaces, index.layout.half_split):
        buf.write(struct.pack("<II", len(dims), split))
        buf.write(np.asarray(dims, dtype="<u4").tobytes())
    for part in index.parts:
        buf.write(part.first.centroids.astype("<f4").tobytes())
        buf.write(part.second.centroids.astype("<f4").tobytes())
        buf.write(part.imi.offsets.astype("<u8").tobytes())
        buf.write(part.imi.ids.astype("<u4").tobytes())
    return buf.getvalue()


def save_index(index: SucoIndex, path) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(to_bytes(index))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, nbytes: int, section: str) -> bytes:
        end = self.pos + nbytes
        if end > len(self.raw):
            raise CorruptIndexError(
                section, f"truncated at byte {len(self.raw)}, needed {end}"
            )
        chunk = self.raw[self.pos:end]
        self.pos = end
        return chunk

    def array(self, dtype: str, count: int, section: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count, section), dtype=dtype).copy()


def from_bytes(raw: bytes) -> SucoIndex:
    r = _Reader(raw)
    if r.take(4, "magic") != MAGIC:
        raise CorruptIndexError("magic", "not a SUCO index file")
    (version,) = struct.unpack("<I", r.take(4, "version"))
    if version != FORMAT_VERSION:
        raise CorruptIndexError("version", f"unsupported format version {version}")
    n, d, ns, k_half, iters, seed, mode_code = _HEADER.unpack(r.take(_HEADER.size, "header"))
    if mode_code >= len(MODES) or ns < 1 or k_half < 1 or n < 1 or d < 1:
        raise CorruptIndexError("header", "field out of range")

    subspaces, splits = [], []
    for i in range(ns):
        size, split = struct.unpack("<II", r.take(8, f"layout[{i}]"))
        if not 1 <= split < size <= d:
            raise CorruptIndexError(f"layout[{i}]", f"bad size {size} / split {split}")
        dims = r.array("<u4", size, f"layout[{i}]").astype(np.int64)
        dims.flags.writeable = False
        subspaces.append(dims)
        splits.append(split)
    allowed = np.sort(np.concatenate(subspaces))
    if not np.array_equal(allowed, np.arange(d)):
        raise CorruptIndexError("layout", "subspaces do not partition the dimensions")
    layout = SubspaceLayout(d=d, subspaces=tuple(subspaces), half_split=tuple(splits),
                            seed=seed, mode=MODES[mode_code])

    parts = []
    cells = k_half * k_half
    for i in range(ns):
        h1, h2 = layout.half_dims(i)
        c1 = r.array("<f4", k_half * h1, f"subspace[{i}].centroids1").reshape(k_half, h1)
        c2 = r.array("<f4", k_half * h2, f"subspace[{i}].centroids2").reshape(k_half, h2)
        offsets = r.array("<u8", cells + 1, f"subspace[{i}].offsets").astype(np.uint64)
        ids = r.array("<u4", n, f"subspace[{i}].ids").astype(np.uint32)
        imi = Imi(k_half=k_half, offsets=offsets, ids=ids)
        try:
            imi.check_partition()
        except AssertionError as exc:
            raise CorruptIndexError(f"subspace[{i}].imi", str(exc)) from None
        a1, a2 = imi.assignments()
        parts.append(SubspaceIndex(
            KMeansModel(c1.astype(np.float32), a1),
            KMeansModel(c2.astype(np.float32), a2),
            imi,
        ))
    if r.pos != len(raw):
        raise CorruptIndexError("trailer", f"{len(raw) - r.pos} unexpected trailing bytes")
    return SucoIndex(layout=layout, n=n, k_half=k_half, iters=iters, seed=seed, parts=parts)


def load_index(path) -> SucoIndex:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
