"""Greedy jigsaw-puzzle-solver attack on block-scrambled images.

Pieces have unknown position and unknown rotation ("type-2" puzzles). The
solver scores every (piece, side, piece, rotation) pairing with a
gradient-aware SSD, then merges pieces in order of increasing dissimilarity,
Kruskal style, keeping each component on a consistent lattice. Flips,
negative-positive inversion and colour shuffles are not searched.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import dihedral
from .cipher import CipherConfig, encrypt_grid, provenance
from .core import (
    CountMismatch,
    KeyBundle,
    Mode,
    RgbImage,
    SizeMismatch,
    assemble,
    partition,
)
from .keystream import Stream
from .metrics import AssemblyResult, AttackScore, score

TOP, RIGHT, BOTTOM, LEFT = range(4)
SIDE_OFFSETS = {TOP: (-1, 0), RIGHT: (0, 1), BOTTOM: (1, 0), LEFT: (0, -1)}


@dataclass(frozen=True)
class Piece:
    index: int
    tile: np.ndarray  # (size, size, 3)

    def __post_init__(self):
        if self.tile.ndim != 3 or self.tile.shape[0] != self.tile.shape[1]:
            raise SizeMismatch("pieces must be square (size, size, 3) tiles")


def _rot_offset(offset: tuple[int, int], quarter_turns: int) -> tuple[int, int]:
    dy, dx = offset
    for _ in range(quarter_turns % 4):
        dy, dx = dx, -dy
    return dy, dx


def _edge_features(tile: np.ndarray):
    """Right-facing features of a (size, size, 3) float tile."""
    last = tile[:, -1, :].reshape(-1)
    first = tile[:, 0, :].reshape(-1)
    if tile.shape[1] >= 2:
        pred_right = 2 * last - tile[:, -2, :].reshape(-1)
        pred_left = 2 * first - tile[:, 1, :].reshape(-1)
    else:
        pred_right, pred_left = last, first
    return last, first, pred_right, pred_left


def _oriented(tile: np.ndarray, quarter_turns: int) -> np.ndarray:
    return np.rot90(tile, -quarter_turns, axes=(0, 1)).astype(np.float64)


def boundary_dissimilarity(a: Piece, side: int, b: Piece, rotation: int) -> float:
    """Dissimilarity of placing ``b`` (rotated clockwise) against ``side`` of ``a``.

    Each tile's two outermost rows/columns extrapolate the neighbour's
    boundary; squared errors of both predictions are averaged.
    """
    if a.tile.shape != b.tile.shape:
        raise SizeMismatch("pieces differ in size")
    turn = (RIGHT - side) % 4
    left = _oriented(a.tile, turn)
    right = _oriented(b.tile, (rotation + turn) % 4)
    a_last, _, a_pred, _ = _edge_features(left)
    _, b_first, _, b_pred = _edge_features(right)
    return 0.5 * (float(((a_pred - b_first) ** 2).sum()) + float(((b_pred - a_last) ** 2).sum()))


def compatibility_table(pieces: list[Piece]) -> np.ndarray:
    """``D[i, side, j, rotation]`` for all pairs; the diagonal i == j is +inf."""
    n = len(pieces)
    sizes = {p.tile.shape for p in pieces}
    if len(sizes) != 1:
        raise SizeMismatch("pieces differ in size")
    feats = [[_edge_features(_oriented(p.tile, o)) for p in pieces] for o in range(4)]
    last = [np.array([f[0] for f in feats[o]]) for o in range(4)]
    first = [np.array([f[1] for f in feats[o]]) for o in range(4)]
    pred_r = [np.array([f[2] for f in feats[o]]) for o in range(4)]
    pred_l = [np.array([f[3] for f in feats[o]]) for o in range(4)]
    # H[a, oa, b, ob]: a at orientation oa on the left of b at orientation ob
    H = np.empty((n, 4, n, 4))
    for oa in range(4):
        for ob in range(4):
            H[:, oa, :, ob] = 0.5 * (
                cdist(pred_r[oa], first[ob], "sqeuclidean")
                + cdist(last[oa], pred_l[ob], "sqeuclidean")
            )
    D = np.empty((n, 4, n, 4))
    for side in range(4):
        turn = (RIGHT - side) % 4
        for rot in range(4):
            D[:, side, :, rot] = H[:, turn, :, (rot + turn) % 4]
    idx = np.arange(n)
    D[idx, :, idx, :] = np.inf
    return D


class _Component:
    __slots__ = ("label", "cells", "bbox", "version")

    def __init__(self, piece: int):
        self.label = piece
        self.cells = {(0, 0): (piece, 0)}  # (y, x) -> (piece, rotation)
        self.bbox = (0, 0, 0, 0)  # min_y, min_x, max_y, max_x
        self.version = 0


def _fits(h: int, w: int, cols: int, rows: int) -> bool:
    return (h <= rows and w <= cols) or (h <= cols and w <= rows)


class GreedySolver:
    """Kruskal-style greedy assembly under a frame-size constraint.

    ``confidence`` ranks candidate pairings by dissimilarity divided by the
    second-best alternative for the same (piece, side), which demotes
    pairings on ambiguous flat edges. With ``confidence=False`` raw
    dissimilarities are used.
    """

    def __init__(
        self,
        cols: int,
        rows: int,
        confidence: bool = True,
        frame_constraint: bool = True,
        max_frames: int = 64,
    ):
        self.cols, self.rows = cols, rows
        self.max_frames = max_frames
        self.confidence = confidence
        self.frame_constraint = frame_constraint

    def candidate_order(self, D: np.ndarray) -> np.ndarray:
        n = D.shape[0]
        key = D
        if self.confidence:
            flat = D.reshape(n, 4, n * 4)
            second = np.partition(flat, 1, axis=2)[:, :, 1] if n * 4 > 1 else flat[:, :, 0]
            key = D / (second[:, :, None, None] + 1.0)
        key = key.reshape(-1)
        valid = np.flatnonzero(np.isfinite(key))
        i, side, j, rot = np.unravel_index(valid, D.shape)
        # ties broken by (i, j, side, rotation), lowest first
        order = np.lexsort((rot, side, j, i, key[valid]))
        return np.stack([i[order], side[order], j[order], rot[order]], axis=1)

    def solve(self, pieces: list[Piece], D: np.ndarray | None = None) -> AssemblyResult:
        n = len(pieces)
        if n != self.cols * self.rows:
            raise CountMismatch(f"{n} pieces for a {self.cols}x{self.rows} frame")
        if n == 1:
            return AssemblyResult(self.cols, self.rows, [0], [0])
        if D is None:
            D = compatibility_table(pieces)
        comp_of = [_Component(p) for p in range(n)]
        where = [(0, 0, 0)] * n  # piece -> (y, x, rotation) within its component
        alive = n
        rejected = set()
        for i, side, j, rot in self.candidate_order(D).tolist():
            a, b = comp_of[i], comp_of[j]
            if a is b:
                continue
            yi, xi, ri = where[i]
            dy, dx = _rot_offset(SIDE_OFFSETS[side], ri)
            yj, xj, rj = where[j]
            delta = (rot + ri - rj) % 4
            # b's frame maps into a's frame as p -> shift + R^delta p
            ry, rx = _rot_offset((yj, xj), delta)
            shift = (yi + dy - ry, xi + dx - rx)
            key = (a.label, a.version, b.label, b.version, delta, shift)
            if key in rejected:
                continue
            if self._merge(a, b, delta, shift, comp_of, where):
                alive -= 1
                if alive == 1:
                    break
            else:
                rejected.add(key)
        comps = {c.label: c for c in comp_of}
        return self._place(comps, D)

    def _merge(self, a: _Component, b: _Component, delta: int, shift, comp_of, where) -> bool:
        """Join b into a's lattice (or a into b's, whichever moves fewer pieces)."""
        if len(b.cells) <= len(a.cells):
            keep, move, turn = a, b, delta

            def mapping(y, x):
                ry, rx = _rot_offset((y, x), turn)
                return shift[0] + ry, shift[1] + rx
        else:
            keep, move, turn = b, a, -delta % 4

            def mapping(y, x):
                return _rot_offset((y - shift[0], x - shift[1]), turn)

        moved = {}
        cells = keep.cells
        for (y, x), (p, r) in move.cells.items():
            pos = mapping(y, x)
            if pos in cells:
                return False
            moved[pos] = (p, (r + turn) % 4)
        ys = [c[0] for c in moved]
        xs = [c[1] for c in moved]
        bbox = (
            min(keep.bbox[0], min(ys)),
            min(keep.bbox[1], min(xs)),
            max(keep.bbox[2], max(ys)),
            max(keep.bbox[3], max(xs)),
        )
        h, w = bbox[2] - bbox[0] + 1, bbox[3] - bbox[1] + 1
        if self.frame_constraint and not _fits(h, w, self.cols, self.rows):
            return False
        for (y, x), (p, r) in moved.items():
            cells[(y, x)] = (p, r)
            where[p] = (y, x, r)
            comp_of[p] = keep
        keep.bbox = bbox
        keep.version += 1
        return True

    def _frame_candidates(self, main: _Component) -> list[dict]:
        """Frame placements of the main component retaining the most pieces.

        Each candidate maps frame cell -> (piece, rotation); candidates are
        ordered by global rotation, then offset.
        """
        u, v = self.cols, self.rows
        found, most = [], 0
        for g in range(4):
            cells = {_rot_offset(pos, g): (p, (r + g) % 4) for pos, (p, r) in main.cells.items()}
            ys = [c[0] for c in cells]
            xs = [c[1] for c in cells]
            min_y, min_x = min(ys), min(xs)
            h, w = max(ys) - min_y + 1, max(xs) - min_x + 1
            # windows may hang off the component when it is smaller than the frame
            for top in range(min_y - max(v - h, 0), min_y + max(h - v, 0) + 1):
                for left in range(min_x - max(u - w, 0), min_x + max(w - u, 0) + 1):
                    kept = {
                        (y - top) * u + (x - left): pr
                        for (y, x), pr in cells.items()
                        if 0 <= y - top < v and 0 <= x - left < u
                    }
                    if len(kept) > most:
                        found, most = [], len(kept)
                    if len(kept) == most:
                        found.append(kept)
        return found

    def _fill(self, fixed: dict, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Complete a partial frame one piece at a time.

        The next cell is the empty one with the most placed neighbours; it
        receives the free (piece, rotation) with the lowest mean
        dissimilarity to those neighbours.
        """
        u, v = self.cols, self.rows
        n = u * v
        placement = np.full(n, -1, dtype=np.int64)
        orientation = np.zeros(n, dtype=np.int64)
        acc = np.zeros((n, n, 4))
        count = np.zeros(n, dtype=np.int64)
        free = np.ones(n, dtype=bool)
        rots = np.arange(4)

        def put(cell, p, r):
            placement[cell], orientation[cell] = p, r
            free[p] = False
            y, x = divmod(cell, u)
            for side, (dy, dx) in SIDE_OFFSETS.items():
                ny, nx = y + dy, x + dx
                if 0 <= ny < v and 0 <= nx < u and placement[ny * u + nx] == -1:
                    own_side = _SIDE_OF[_rot_offset((dy, dx), -r)]
                    acc[ny * u + nx] += D[p, own_side][:, (rots - r) % 4]
                    count[ny * u + nx] += 1

        for cell, (p, r) in sorted(fixed.items()):
            put(cell, p, r)
        while (placement == -1).any():
            empty = placement == -1
            if not (count[empty] > 0).any():
                cell = int(np.flatnonzero(empty)[0])
                put(cell, int(np.flatnonzero(free)[0]), 0)
                continue
            best_count = count[empty].max()
            cells = np.flatnonzero(empty & (count == best_count))
            costs = acc[cells][:, free, :] / best_count
            k, pi, r = np.unravel_index(int(np.argmin(costs)), costs.shape)
            put(int(cells[k]), int(np.flatnonzero(free)[pi]), int(r))
        return placement, orientation

    def frame_cost(self, placement: np.ndarray, orientation: np.ndarray, D: np.ndarray) -> float:
        u, v = self.cols, self.rows
        total = 0.0
        for cell in range(u * v):
            y, x = divmod(cell, u)
            p, r = placement[cell], orientation[cell]
            for side in (RIGHT, BOTTOM):
                dy, dx = SIDE_OFFSETS[side]
                if y + dy < v and x + dx < u:
                    nb = (y + dy) * u + x + dx
                    own_side = _SIDE_OF[_rot_offset((dy, dx), -r)]
                    total += D[p, own_side, placement[nb], (orientation[nb] - r) % 4]
        return float(total)

    def _place(self, comps, D: np.ndarray) -> AssemblyResult:
        main = max(comps.values(), key=lambda c: (len(c.cells), -min(p for p, _ in c.cells.values())))
        best = None
        for fixed in self._frame_candidates(main)[: self.max_frames]:
            placement, orientation = self._fill(fixed, D)
            cost = self.frame_cost(placement, orientation, D)
            if best is None or cost < best[0]:
                best = (cost, placement, orientation)
        return AssemblyResult(self.cols, self.rows, best[1], best[2])


_SIDE_OF = {offset: side for side, offset in SIDE_OFFSETS.items()}


def solve(pieces: list[Piece], cols: int, rows: int, **options) -> AssemblyResult:
    return GreedySolver(cols, rows, **options).solve(pieces)


def grid_pieces(tiles: np.ndarray) -> list[Piece]:
    """Pieces from a ``(3, L, s, s)`` tile array."""
    return [Piece(k, np.moveaxis(tiles[:, k], 0, -1)) for k in range(tiles.shape[1])]


def render(pieces: list[Piece], result: AssemblyResult) -> RgbImage:
    """Paint the assembly, each piece rotated by its (rotation-only) orientation."""
    s = pieces[0].tile.shape[0]
    u, v = result.grid_cols, result.grid_rows
    out = np.zeros((v * s, u * s, 3), dtype=np.uint8)
    for cell, (p, d) in enumerate(zip(result.placement, result.orientation)):
        y, x = divmod(cell, u)
        tile = np.moveaxis(dihedral.apply(int(d), np.moveaxis(pieces[p].tile, -1, 0)), 0, -1)
        out[y * s : (y + 1) * s, x * s : (x + 1) * s] = tile
    return RgbImage(out)


def attack_result(result: AssemblyResult, src: np.ndarray, d: np.ndarray) -> AssemblyResult:
    """Re-express an assembly of encrypted tiles in terms of plaintext blocks.

    ``src``/``d`` are one channel's provenance: encrypted slot k holds
    plaintext block ``src[k]`` transformed by dihedral element ``d[k]``.
    """
    pieces = result.placement
    net = dihedral.COMPOSE[result.orientation, d[pieces]]
    return AssemblyResult(result.grid_cols, result.grid_rows, src[pieces], net)


def attack_score(result: AssemblyResult, src: np.ndarray, d: np.ndarray) -> AttackScore:
    """Best per-channel score: a channel counts as recovered on its own."""
    scores = [score(attack_result(result, src[c], d[c])) for c in range(src.shape[0])]
    return max(scores, key=lambda s: s.total)


def trial_keys(mode: Mode, seed: int, trial: int) -> KeyBundle:
    from .keyfile import derive_keys

    s = Stream(seed)
    for _ in range(trial):
        s.next_u64()
    return derive_keys(mode, s.next_u64())


@dataclass
class AttackReport:
    rows: list[AttackScore]
    best_index: int
    best_image: RgbImage | None = None

    @property
    def best(self) -> AttackScore:
        return self.rows[self.best_index]

    def mean(self) -> AttackScore:
        return AttackScore(*(float(np.mean([getattr(r, f) for r in self.rows])) for f in ("dc", "nc", "lc")))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "Dc", "Nc", "Lc"])
        for t, r in enumerate(self.rows):
            w.writerow([t, f"{r.dc:.4f}", f"{r.nc:.4f}", f"{r.lc:.4f}"])
        b = self.best
        w.writerow(["best", f"{b.dc:.4f}", f"{b.nc:.4f}", f"{b.lc:.4f}"])
        return buf.getvalue()


def evaluate_attack(
    original: RgbImage,
    config: CipherConfig,
    trials: int = 10,
    seed: int = 0,
    **solver_options,
) -> AttackReport:
    """Encrypt ``trials`` times with fresh keys, attack each, keep the best by Dc+Nc+Lc.

    Keys for trial t are derived from ``seed``; ``config.keys`` supplies only
    the key mode.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = partition(original, config.spec, allow_crop=config.allow_crop)
    rows, images = [], []
    for t in range(trials):
        keys = trial_keys(config.keys.mode, seed, t)
        cfg = CipherConfig(config.spec, keys, config.enabled_steps, config.allow_crop)
        enc, rec = encrypt_grid(grid, cfg)
        pieces = grid_pieces(enc.tiles)
        result = solve(pieces, grid.cols, grid.rows, **solver_options)
        src, d = provenance(rec)
        rows.append(attack_score(result, src, d))
        images.append((pieces, result))
    best = max(range(trials), key=lambda t: (rows[t].total, -t))
    return AttackReport(rows, best, render(*images[best]))


def encrypted_pieces(original: RgbImage, config: CipherConfig):
    grid = partition(original, config.spec, allow_crop=config.allow_crop)
    enc, rec = encrypt_grid(grid, config)
    return grid, grid_pieces(enc.tiles), rec, assemble(enc)
