"""Partition of the dimensions into disjoint subspaces, each cut into two halves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigurationError, ContractError

Mode = Literal["contiguous", "shuffled"]
Half = Literal["first", "second", "whole"]
MODES = ("contiguous", "shuffled")


@dataclass(frozen=True, eq=False)
class SubspaceLayout:
    d: int
    subspaces: tuple[np.ndarray, ...]
    half_split: tuple[int, ...]
    seed: int = 0
    mode: Mode = "contiguous"

    @property
    def num_subspaces(self) -> int:
        return len(self.subspaces)

    def sizes(self) -> list[int]:
        return [len(s) for s in self.subspaces]

    def half_dims(self, i: int) -> tuple[int, int]:
        split = self.half_split[i]
        return split, len(self.subspaces[i]) - split

    def dims(self, i: int, half: Half = "whole") -> np.ndarray:
        if not 0 <= i < self.num_subspaces:
            raise ContractError(f"subspace index {i} outside [0, {self.num_subspaces})")
        idx = self.subspaces[i]
        if half == "whole":
            return idx
        if half == "first":
            return idx[: self.half_split[i]]
        if half == "second":
            return idx[self.half_split[i]:]
        raise ContractError(f"unknown half {half!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubspaceLayout):
            return NotImplemented
        return (
            self.d == other.d
            and self.seed == other.seed
            and self.mode == other.mode
            and self.half_split == other.half_split
            and len(self.subspaces) == len(other.subspaces)
            and all(np.array_equal(a, b) for a, b in zip(self.subspaces, other.subspaces))
        )


def sample_subspaces(
    d: int,
    num_subspaces: int,
    mode: Mode = "contiguous",
    seed: int = 0,
    min_dims: int = 2,
) -> SubspaceLayout:
    """Split ``0..d-1`` into ``num_subspaces`` blocks of ``d // num_subspaces``.

    The last block takes the remainder. In ``shuffled`` mode the dimensions
    are permuted with a seeded generator before the block split. ``min_dims``
    defaults to 2 so every subspace can be halved; collision counting alone
    works with 1.
    """
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if num_subspaces < 1 or (num_subspaces < 2 and min_dims >= 2):
        raise ConfigurationError(f"need at least 2 subspaces, got {num_subspaces}")
    s = d // num_subspaces
    if s < min_dims:
        raise ConfigurationError(
            f"d={d} with {num_subspaces} subspaces leaves {s} dims per subspace; "
            f"need at least {min_dims}"
        )
    if mode == "contiguous":
        perm = np.arange(d, dtype=np.int64)
    else:
        perm = np.random.default_rng(seed).permutation(d).astype(np.int64)
    blocks = []
    for i in range(num_subspaces):
        stop = s * (i + 1) if i < num_subspaces - 1 else d
        block = perm[s * i : stop].copy()
        block.flags.writeable = False
        blocks.append(block)
    return SubspaceLayout(
        d=d,
        subspaces=tuple(blocks),
        half_split=tuple(len(b) // 2 for b in blocks),
        seed=int(seed),
        mode=mode,
    )


def project(point, layout: SubspaceLayout, i: int, half: Half = "whole") -> np.ndarray:
    """Components of ``point`` (or rows of a matrix) on subspace ``i`` (0-based)."""
    arr = np.asarray(point)
    if arr.shape[-1] != layout.d:
        raise ContractError(f"point has {arr.shape[-1]} components, layout d={layout.d}")
    return arr[..., layout.dims(i, half)]
