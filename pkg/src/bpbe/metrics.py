"""Attack scoring (Dc, Nc, Lc) and colour-distribution statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import dihedral
from .core import RgbImage, ShapeMismatch

EMPTY = -1
RIGHT, DOWN = (0, 1), (1, 0)


@dataclass(frozen=True)
class AssemblyResult:
    """Which piece sits in each cell of a ``grid_cols x grid_rows`` frame.

    ``placement`` and ``orientation`` are flat row-major arrays; orientation
    is a dihedral element (see :mod:`bpbe.dihedral`) applied to the piece.
    """

    grid_cols: int
    grid_rows: int
    placement: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        n = self.grid_cols * self.grid_rows
        placement = np.asarray(self.placement, dtype=np.int64).reshape(-1)
        orientation = np.asarray(self.orientation, dtype=np.int64).reshape(-1)
        if placement.size != n or orientation.size != n:
            raise ShapeMismatch(f"expected {n} cells")
        placed = placement[placement != EMPTY]
        if len(np.unique(placed)) != len(placed):
            raise ValueError("a piece is placed more than once")
        if orientation.min(initial=0) < 0 or orientation.max(initial=0) >= dihedral.ORDER:
            raise ValueError("orientation out of range")
        object.__setattr__(self, "placement", placement)
        object.__setattr__(self, "orientation", orientation)

    @property
    def cells(self) -> int:
        return self.grid_cols * self.grid_rows

    @classmethod
    def identity(cls, cols: int, rows: int) -> AssemblyResult:
        n = cols * rows
        return cls(cols, rows, np.arange(n), np.zeros(n, dtype=np.int64))

    def adjacency_count(self) -> int:
        u, v = self.grid_cols, self.grid_rows
        return 2 * u * v - u - v


def _truth_positions(result: AssemblyResult, truth: AssemblyResult) -> dict[int, tuple[int, int]]:
    if (result.grid_cols, result.grid_rows) != (truth.grid_cols, truth.grid_rows):
        raise ShapeMismatch("result and truth grids differ in shape")
    if np.any(truth.orientation != dihedral.IDENTITY):
        raise ValueError("truth must use identity orientations")
    u = truth.grid_cols
    return {int(p): divmod(cell, u) for cell, p in enumerate(truth.placement) if p != EMPTY}


def _correct_pairs(result: AssemblyResult, truth: AssemblyResult):
    """Yield ((cell_a, cell_b), ok) for every neighbouring pair of cells."""
    pos = _truth_positions(result, truth)
    u, v = result.grid_cols, result.grid_rows
    for y in range(v):
        for x in range(u):
            a = y * u + x
            for step in (RIGHT, DOWN):
                ny, nx = y + step[0], x + step[1]
                if ny >= v or nx >= u:
                    continue
                b = ny * u + nx
                yield (a, b), _pair_ok(result, pos, a, b, step)


def _pair_ok(result, pos, a, b, step) -> bool:
    pa, pb = int(result.placement[a]), int(result.placement[b])
    if pa == EMPTY or pb == EMPTY or pa not in pos or pb not in pos:
        return False
    t = int(result.orientation[a])
    if t != result.orientation[b]:
        return False
    (ya, xa), (yb, xb) = pos[pa], pos[pb]
    offset = (yb - ya, xb - xa)
    if abs(offset[0]) + abs(offset[1]) != 1:
        return False
    return dihedral.act_on_offset(t, offset) == step


def direct_comparison(result: AssemblyResult, truth: AssemblyResult) -> float:
    """Share of pieces sitting in their true cell with identity orientation."""
    _truth_positions(result, truth)
    ok = (result.placement == truth.placement) & (result.orientation == dihedral.IDENTITY)
    ok &= result.placement != EMPTY
    return float(ok.sum()) / result.cells


def neighbor_comparison(result: AssemblyResult, truth: AssemblyResult) -> float:
    """Share of the ``2uv - u - v`` cell adjacencies that join true neighbours consistently."""
    total = result.adjacency_count()
    if total == 0:
        return 1.0 if direct_comparison(result, truth) == 1.0 else 0.0
    return sum(ok for _, ok in _correct_pairs(result, truth)) / total


def largest_component(result: AssemblyResult, truth: AssemblyResult) -> float:
    """Largest 4-connected region joined only by correct adjacencies, over n."""
    n = result.cells
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (a, b), ok in _correct_pairs(result, truth):
        if ok:
            parent[find(a)] = find(b)
    sizes = np.bincount([find(i) for i in range(n)], minlength=n)
    return float(sizes.max()) / n


@dataclass(frozen=True)
class AttackScore:
    dc: float
    nc: float
    lc: float

    @property
    def total(self) -> float:
        return self.dc + self.nc + self.lc


def score(result: AssemblyResult, truth: AssemblyResult | None = None) -> AttackScore:
    if truth is None:
        truth = AssemblyResult.identity(result.grid_cols, result.grid_rows)
    return AttackScore(
        direct_comparison(result, truth),
        neighbor_comparison(result, truth),
        largest_component(result, truth),
    )


def metric_csv(values: dict[str, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for name, value in values.items():
        w.writerow([name, f"{value:.4f}"])
    return buf.getvalue()


def pack_colors(image: RgbImage) -> np.ndarray:
    d = image.data.astype(np.uint32)
    return ((d[..., 0] << 16) | (d[..., 1] << 8) | d[..., 2]).reshape(-1)


def entropy24(image: RgbImage) -> float:
    """Shannon entropy in bits of the full 24-bit colour distribution."""
    _, counts = np.unique(pack_colors(image), return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def hsv_hue_saturation(image: RgbImage) -> tuple[np.ndarray, np.ndarray]:
    """Hexcone hue in degrees [0, 360) and saturation in [0, 1] per pixel."""
    rgb = image.data.reshape(-1, 3).astype(np.float64)
    r, g, b = rgb.T
    mx, mn = rgb.max(axis=1), rgb.min(axis=1)
    delta = mx - mn
    sat = np.divide(delta, mx, out=np.zeros_like(mx), where=mx > 0)
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.select(
        [delta == 0, mx == r, mx == g],
        [0.0, np.mod((g - b) / safe, 6.0), (b - r) / safe + 2.0],
        (r - g) / safe + 4.0,
    ) * 60.0
    return np.mod(hue, 360.0), sat


def hue_sat_histogram(image: RgbImage, bins: int = 256) -> np.ndarray:
    """``bins x bins`` counts indexed ``[hue_bin, sat_bin]``."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    hue, sat = hsv_hue_saturation(image)
    hb = np.minimum((hue / 360.0 * bins).astype(np.int64), bins - 1)
    sb = np.minimum((sat * bins).astype(np.int64), bins - 1)
    hist = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(hist, (hb, sb), 1)
    return hist


def histogram_csv(hist: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hue_bin", "sat_bin", "count"])
    for (h, s), count in np.ndenumerate(hist):
        w.writerow([h, s, int(count)])
    return buf.getvalue()
