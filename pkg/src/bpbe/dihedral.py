"""The eight rotation/flip symmetries of a square tile.

An element is encoded as ``r + 4 * h``: rotate ``r`` quarter-turns
clockwise, then mirror left-right if ``h``. Composition and the action on
grid offsets are derived by applying the transforms to probe arrays, so the
tables cannot drift from :func:`apply`.
"""

from __future__ import annotations

import numpy as np

IDENTITY = 0
ORDER = 8

FLIP_NONE, FLIP_H, FLIP_V, FLIP_BOTH = range(4)


def rotate(tile: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate the last two axes clockwise."""
    return np.rot90(tile, -quarter_turns, axes=(-2, -1))


def flip(tile: np.ndarray, kind: int) -> np.ndarray:
    if kind & FLIP_H:
        tile = tile[..., :, ::-1]
    if kind & FLIP_V:
        tile = tile[..., ::-1, :]
    return tile


def rotate_then_flip(tile: np.ndarray, quarter_turns: int, flip_kind: int) -> np.ndarray:
    return flip(rotate(tile, quarter_turns), flip_kind)


def apply(d: int, tile: np.ndarray) -> np.ndarray:
    return rotate_then_flip(tile, d % 4, FLIP_H if d >= 4 else FLIP_NONE)


_PROBE = np.arange(9).reshape(3, 3)
_IMAGES = [apply(d, _PROBE) for d in range(ORDER)]


def _lookup(arr: np.ndarray) -> int:
    for d, img in enumerate(_IMAGES):
        if np.array_equal(arr, img):
            return d
    raise AssertionError("not a dihedral image of the probe")


# FROM_ROTATION_FLIP[r, f]: element equal to rotating r then flipping f
FROM_ROTATION_FLIP = np.array(
    [[_lookup(rotate_then_flip(_PROBE, r, f)) for f in range(4)] for r in range(4)]
)
# COMPOSE[a, b]: apply b first, then a
COMPOSE = np.array(
    [[_lookup(apply(a, apply(b, _PROBE))) for b in range(ORDER)] for a in range(ORDER)]
)
INVERSE = np.array([int(np.flatnonzero(COMPOSE[:, d] == IDENTITY)[0]) for d in range(ORDER)])


def _offset_action(d: int, dy: int, dx: int) -> tuple[int, int]:
    probe = np.zeros((3, 3), dtype=int)
    probe[1 + dy, 1 + dx] = 1
    y, x = np.argwhere(apply(d, probe))[0]
    return int(y) - 1, int(x) - 1


def act_on_offset(d: int, offset: tuple[int, int]) -> tuple[int, int]:
    """Where a unit grid offset ``(dy, dx)`` points after transforming the picture by ``d``."""
    return _OFFSET_TABLE[d][offset]


_OFFSET_TABLE = [
    {(dy, dx): _offset_action(d, dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)}
    for d in range(ORDER)
]
