"""Domain types shared across the toolkit: images, block grids, keys."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

CHANNELS = 3
MASK64 = (1 << 64) - 1


class BpbeError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(BpbeError, ValueError):
    pass


class NonSquareBlock(BpbeError, ValueError):
    pass


class ShapeMismatch(BpbeError, ValueError):
    pass


class SizeMismatch(BpbeError, ValueError):
    pass


class CountMismatch(BpbeError, ValueError):
    pass


class CorruptStream(BpbeError, ValueError):
    pass


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster stored as an ``(height, width, 3)`` uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != CHANNELS:
            raise DimensionMismatch(f"expected (H, W, 3) array, got shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise DimensionMismatch("image is empty")
        if data.dtype != np.uint8:
            if data.min() < 0 or data.max() > 255:
                raise ValueError("samples must lie in [0, 255]")
        # private copy so freezing it never touches the caller's array
        data = np.array(data, dtype=np.uint8, order="C")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None

    def crop(self, width: int, height: int) -> RgbImage:
        """Keep the top-left ``width x height`` region."""
        if width > self.width or height > self.height:
            raise DimensionMismatch("crop larger than image")
        return RgbImage(self.data[:height, :width])


@dataclass(frozen=True)
class BlockSpec:
    bx: int
    by: int

    def __post_init__(self):
        if self.bx < 1 or self.by < 1:
            raise ValueError("block dimensions must be >= 1")

    @classmethod
    def square(cls, size: int) -> BlockSpec:
        return cls(size, size)

    @property
    def is_square(self) -> bool:
        return self.bx == self.by


@dataclass(frozen=True)
class BlockGrid:
    """Row-major block decomposition of an image.

    ``tiles`` has shape ``(3, L, by, bx)``: channel-major so each channel's
    blocks can be permuted independently.
    """

    cols: int
    rows: int
    tiles: np.ndarray

    def __post_init__(self):
        t = self.tiles
        if t.ndim != 4 or t.shape[0] != CHANNELS or t.shape[1] != self.cols * self.rows:
            raise ShapeMismatch(
                f"tiles shape {t.shape} inconsistent with {self.cols}x{self.rows} grid"
            )

    @property
    def block_count(self) -> int:
        return self.cols * self.rows

    @property
    def spec(self) -> BlockSpec:
        return BlockSpec(self.tiles.shape[3], self.tiles.shape[2])

    def with_tiles(self, tiles: np.ndarray) -> BlockGrid:
        return BlockGrid(self.cols, self.rows, tiles)


class Mode(enum.Enum):
    CONVENTIONAL = "conventional"
    PROPOSED = "proposed"


def _check_key(value: int) -> int:
    value = int(value)
    if not 0 <= value <= MASK64:
        raise ValueError(f"subkey {value:#x} is not a 64-bit value")
    return value


@dataclass(frozen=True)
class KeyBundle:
    """Subkeys K1..K4 (one per channel) and the shared colour-shuffle key K5."""

    mode: Mode
    k1: tuple[int, int, int]
    k2: tuple[int, int, int]
    k3: tuple[int, int, int]
    k4: tuple[int, int, int]
    k5: int

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            keys = tuple(_check_key(k) for k in getattr(self, name))
            if len(keys) != CHANNELS:
                raise ValueError(f"{name} needs one subkey per channel")
            if self.mode is Mode.CONVENTIONAL and len(set(keys)) != 1:
                raise ValueError(f"conventional mode requires identical {name} channel subkeys")
            object.__setattr__(self, name, keys)
        object.__setattr__(self, "k5", _check_key(self.k5))

    @classmethod
    def conventional(cls, k1: int, k2: int, k3: int, k4: int, k5: int) -> KeyBundle:
        return cls(Mode.CONVENTIONAL, (k1,) * 3, (k2,) * 3, (k3,) * 3, (k4,) * 3, k5)

    @classmethod
    def proposed(cls, k1, k2, k3, k4, k5: int) -> KeyBundle:
        return cls(Mode.PROPOSED, tuple(k1), tuple(k2), tuple(k3), tuple(k4), k5)

    def channel_keys(self, process: int) -> tuple[int, int, int]:
        """Subkeys of process 1..4 for channels R, G, B."""
        return (self.k1, self.k2, self.k3, self.k4)[process - 1]


@dataclass
class BlockTransformRecord:
    """Per-block keyed choices of one encryption.

    Arrays are indexed ``[channel, block]`` with the block index being the
    encrypted-layout position. Fields for disabled steps stay ``None``.
    """

    block_count: int
    position_perm: np.ndarray | None = None  # (3, L): encrypted slot k holds source block perm[c, k]
    rotation: np.ndarray | None = None  # (3, L) quarter-turns clockwise
    flip: np.ndarray | None = None  # (3, L) 0 none, 1 horizontal, 2 vertical, 3 both
    negpos: np.ndarray | None = None  # (3, L) bits
    color_perm: np.ndarray | None = None  # (L,) index into COLOR_PERMUTATIONS


def partition(image: RgbImage, spec: BlockSpec, allow_crop: bool = False) -> BlockGrid:
    """Split ``image`` into ``floor(W/bx) * floor(H/by)`` tiles in row-major order."""
    h, w = image.height, image.width
    cols, rows = w // spec.bx, h // spec.by
    if cols == 0 or rows == 0:
        raise DimensionMismatch(f"{w}x{h} image is smaller than a {spec.bx}x{spec.by} block")
    if not allow_crop and (w % spec.bx or h % spec.by):
        raise DimensionMismatch(
            f"{w}x{h} image is not divisible into {spec.bx}x{spec.by} blocks (pass allow_crop)"
        )
    data = image.data[: rows * spec.by, : cols * spec.bx]
    tiles = (
        data.reshape(rows, spec.by, cols, spec.bx, CHANNELS)
        .transpose(4, 0, 2, 1, 3)
        .reshape(CHANNELS, rows * cols, spec.by, spec.bx)
    )
    return BlockGrid(cols, rows, np.ascontiguousarray(tiles))


def assemble(grid: BlockGrid) -> RgbImage:
    by, bx = grid.tiles.shape[2:]
    data = (
        grid.tiles.reshape(CHANNELS, grid.rows, grid.cols, by, bx)
        .transpose(1, 3, 2, 4, 0)
        .reshape(grid.rows * by, grid.cols * bx, CHANNELS)
    )
    return RgbImage(data)


def block_count(width: int, height: int, spec: BlockSpec) -> int:
    return (width // spec.bx) * (height // spec.by)
