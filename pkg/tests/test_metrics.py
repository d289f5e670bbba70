import itertools

import numpy as np
import pytest

from bpbe import RgbImage
from bpbe.core import ShapeMismatch
from bpbe.metrics import (
    EMPTY,
    AssemblyResult,
    direct_comparison,
    entropy24,
    histogram_csv,
    hue_sat_histogram,
    largest_component,
    metric_csv,
    neighbor_comparison,
    score,
)
from metrics_oracle import naive_scores


def assembly(cols, rows, placement, orientation=None):
    orientation = np.zeros(cols * rows, int) if orientation is None else orientation
    return AssemblyResult(cols, rows, np.asarray(placement), np.asarray(orientation))


@pytest.mark.parametrize("cols,rows", [(2, 2), (3, 2), (2, 3)])
def test_exhaustive_oracle(cols, rows):
    for perm in itertools.permutations(range(cols * rows)):
        got = score(assembly(cols, rows, perm))
        assert (got.dc, got.nc, got.lc) == naive_scores(perm, cols, rows)


def test_identity_scores_one():
    s = score(AssemblyResult.identity(16, 15))
    assert (s.dc, s.nc, s.lc) == (1.0, 1.0, 1.0)


def test_one_by_one():
    s = score(AssemblyResult.identity(1, 1))
    assert (s.dc, s.nc, s.lc) == (1.0, 1.0, 1.0)


def test_adjacency_count():
    assert AssemblyResult.identity(16, 15).adjacency_count() == 449


def test_cyclic_shift_has_no_direct_hits():
    truth = AssemblyResult.identity(16, 15)
    shifted = assembly(16, 15, np.roll(np.arange(240), 1))
    assert direct_comparison(shifted, truth) == 0.0


def test_single_correct_piece():
    truth = AssemblyResult.identity(16, 15)
    placement = np.arange(240)
    placement[1:] = np.roll(placement[1:], 7)
    assert direct_comparison(assembly(16, 15, placement), truth) == pytest.approx(1 / 240)


def test_half_turn_rigid_body():
    cols, rows = 16, 15
    truth = AssemblyResult.identity(cols, rows)
    turned = assembly(cols, rows, np.arange(240)[::-1], np.full(240, 2))
    assert neighbor_comparison(turned, truth) == 1.0
    assert largest_component(turned, truth) == 1.0
    assert direct_comparison(turned, truth) == 0.0


def test_mismatched_orientations_break_adjacency():
    orient = np.zeros(4, int)
    orient[1] = 1
    s = score(assembly(2, 2, [0, 1, 2, 3], orient))
    assert s.dc == 0.75 and s.nc == 0.5


def test_fully_wrong_lc_is_one_over_n():
    # a transposition-like layout where no neighbour pair survives
    placement = [3, 2, 1, 0]
    assert largest_component(assembly(2, 2, placement), AssemblyResult.identity(2, 2)) == 0.25


def test_two_rows_of_three():
    rng = np.random.default_rng(3)
    rest_cells = [3, 4, 5, 6, 7, 11, 12, 13, 14, 15]
    while True:
        placement = np.arange(16)
        placement[rest_cells] = rng.permutation(rest_cells)
        dc, nc, lc = naive_scores(placement.tolist(), 4, 4)
        if nc * 24 == 4:
            break
    assert largest_component(assembly(4, 4, placement), AssemblyResult.identity(4, 4)) == 3 / 16


def test_empty_cells_count_as_wrong():
    s = score(assembly(2, 1, [0, EMPTY]))
    assert (s.dc, s.nc, s.lc) == (0.5, 0.0, 0.5)


def test_assembly_validation():
    with pytest.raises(ShapeMismatch):
        assembly(2, 2, [0, 1, 2])
    with pytest.raises(ValueError):
        assembly(2, 1, [0, 0])
    with pytest.raises(ValueError):
        assembly(2, 1, [0, 1], [0, 8])


def test_metric_csv():
    assert metric_csv({"Nc": 1 / 240}) == "metric,value\nNc,0.0042\n"


def image(rows):
    return RgbImage(np.array(rows, dtype=np.uint8))


def test_entropy_examples():
    assert entropy24(image(np.full((8, 8, 3), 77))) == 0.0
    four = np.zeros((2, 2, 3), np.uint8)
    four[0, 1], four[1, 0], four[1, 1] = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    assert entropy24(image(four)) == pytest.approx(2.0)
    distinct = np.arange(512 * 512, dtype=np.uint32) * 61
    packed = np.stack([(distinct >> 16) & 255, (distinct >> 8) & 255, distinct & 255], -1)
    assert entropy24(image(packed.reshape(512, 512, 3))) == pytest.approx(18.0)


def test_entropy_permutation_invariant(rng):
    data = rng.integers(0, 4, (16, 16, 3), dtype=np.uint8)
    shuffled = rng.permutation(data.reshape(-1, 3)).reshape(16, 16, 3)
    assert entropy24(image(data)) == pytest.approx(entropy24(image(shuffled)))


@pytest.mark.parametrize("bins", [2, 16, 256])
def test_histogram_examples(bins, rng):
    red = hue_sat_histogram(image(np.tile([255, 0, 0], (4, 4, 1))), bins)
    assert red[0, bins - 1] == 16 and red.sum() == 16
    gray = hue_sat_histogram(image(np.repeat(rng.integers(0, 256, (5, 7, 1)), 3, 2)), bins)
    assert gray[:, 0].sum() == 35
    pixel = hue_sat_histogram(image([[[128, 64, 64]]]), bins)
    assert pixel[0, bins // 2] == 1


def test_histogram_hues():
    h = hue_sat_histogram(image([[[0, 255, 0], [0, 0, 255], [255, 255, 0]]]), 6)
    assert h[2, 5] == 1 and h[4, 5] == 1 and h[1, 5] == 1


def test_histogram_mass_and_csv(rng):
    img = image(rng.integers(0, 256, (9, 11, 3)))
    hist = hue_sat_histogram(img, 4)
    assert hist.sum() == 99
    lines = histogram_csv(hist).splitlines()
    assert lines[0] == "hue_bin,sat_bin,count" and len(lines) == 17
    assert sum(int(l.split(",")[2]) for l in lines[1:]) == 99


def test_histogram_bins_validated():
    with pytest.raises(ValueError):
        hue_sat_histogram(image([[[1, 2, 3]]]), 1)
