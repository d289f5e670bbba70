import numpy as np
import pytest

from bpbe import (
    BlockSpec,
    CipherConfig,
    DimensionMismatch,
    KeyBundle,
    Mode,
    NonSquareBlock,
    RgbImage,
    Step,
    decrypt,
    encrypt,
    partition,
)
from bpbe.cipher import (
    COLOR_PERMUTATIONS,
    decrypt_grid,
    encrypt_grid,
    negpos_transform,
    provenance,
    rotate_flip,
    scramble_positions,
    shuffle_colors,
)
from bpbe import dihedral
from bpbe.keyfile import derive_keys
from bpbe.keystream import keyed_permutation


def rand_image(rng, w, h):
    return RgbImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def gray_image(rng, w, h):
    g = rng.integers(0, 256, (h, w, 1), dtype=np.uint8)
    return RgbImage(np.repeat(g, 3, axis=2))


def rand_keys(rng, mode):
    return derive_keys(mode, int(rng.integers(0, 2**63)))


def flat_grid(value, n=1, size=2):
    return partition(RgbImage(np.full((size, size * n, 3), value, np.uint8)), BlockSpec.square(size))


def seed_with_perm(target):
    return next(s for s in range(1000) if keyed_permutation(s, len(target)).tolist() == target)


def test_conventional_positions_keep_gray(rng):
    img = gray_image(rng, 32, 32)
    out, _ = scramble_positions(partition(img, BlockSpec.square(8)), rand_keys(rng, Mode.CONVENTIONAL))
    assert np.array_equal(out.tiles[0], out.tiles[1]) and np.array_equal(out.tiles[1], out.tiles[2])


def test_per_channel_positions():
    swap, ident = seed_with_perm([1, 0]), seed_with_perm([0, 1])
    keys = KeyBundle.proposed((swap, ident, ident), (0, 0, 0), (0, 0, 0), (0, 0, 0), 0)
    tiles = np.arange(3 * 2 * 4, dtype=np.uint8).reshape(3, 2, 2, 2)
    grid = flat_grid(0, n=2).with_tiles(tiles)
    out, rec = scramble_positions(grid, keys)
    assert np.array_equal(out.tiles[0, 0], tiles[0, 1]) and np.array_equal(out.tiles[0, 1], tiles[0, 0])
    assert np.array_equal(out.tiles[1], tiles[1])
    assert rec.position_perm[:2].tolist() == [[1, 0], [0, 1]]


def test_single_block_positions_fixed(rng):
    grid = partition(rand_image(rng, 8, 8), BlockSpec.square(8))
    out, _ = scramble_positions(grid, rand_keys(rng, Mode.PROPOSED))
    assert np.array_equal(out.tiles, grid.tiles)


def test_rotation_requires_square_blocks(rng):
    with pytest.raises(NonSquareBlock):
        CipherConfig(BlockSpec(8, 4), rand_keys(rng, Mode.PROPOSED))
    cfg = CipherConfig(BlockSpec(8, 4), rand_keys(rng, Mode.PROPOSED), {Step.POSITIONAL, Step.NEGPOS})
    img = rand_image(rng, 32, 16)
    assert decrypt(encrypt(img, cfg), cfg) == img
    with pytest.raises(NonSquareBlock):
        rotate_flip(partition(img, BlockSpec(8, 4)), cfg.keys)


def test_rotate_flip_record_matches_tiles(rng):
    grid = partition(rand_image(rng, 16, 16), BlockSpec.square(4))
    out, rec = rotate_flip(grid, rand_keys(rng, Mode.PROPOSED))
    for c in range(3):
        for k in range(grid.block_count):
            want = dihedral.rotate_then_flip(grid.tiles[c, k], rec.rotation[c, k], rec.flip[c, k])
            assert np.array_equal(out.tiles[c, k], want)


def test_negpos_values(rng):
    for value, want in ((255, 0), (200, 55)):
        grid = flat_grid(value)
        keys = next(k for k in (rand_keys(rng, Mode.CONVENTIONAL) for _ in range(64))
                    if negpos_transform(grid, k)[1].negpos[0, 0] == 1)
        assert np.all(negpos_transform(grid, keys)[0].tiles == want)


def test_negpos_is_involution(rng):
    grid = partition(rand_image(rng, 16, 16), BlockSpec.square(4))
    keys = rand_keys(rng, Mode.PROPOSED)
    once, _ = negpos_transform(grid, keys)
    twice, _ = negpos_transform(once, keys)
    assert np.array_equal(twice.tiles, grid.tiles)


def test_color_permutation_table():
    assert COLOR_PERMUTATIONS[0].tolist() == [0, 1, 2]
    pixel = np.array([10, 20, 30])
    assert pixel[COLOR_PERMUTATIONS[5]].tolist() == [30, 20, 10]


def test_shuffle_colors_golden(rng):
    tiles = np.array([10, 20, 30], np.uint8).reshape(3, 1, 1, 1)
    grid = partition(RgbImage(np.zeros((1, 1, 3), np.uint8)), BlockSpec.square(1)).with_tiles(tiles)
    for _ in range(50):
        keys = rand_keys(rng, Mode.CONVENTIONAL)
        out, rec = shuffle_colors(grid, keys)
        got = out.tiles[:, 0, 0, 0].tolist()
        assert got == np.array([10, 20, 30])[COLOR_PERMUTATIONS[rec.color_perm[0]]].tolist()
        if rec.color_perm[0] == 5:
            assert got == [30, 20, 10]


def test_shuffle_keeps_gray_blocks(rng):
    grid = partition(gray_image(rng, 16, 16), BlockSpec.square(4))
    out, _ = shuffle_colors(grid, rand_keys(rng, Mode.PROPOSED))
    assert np.array_equal(out.tiles, grid.tiles)


def test_no_steps_is_identity(rng):
    img = rand_image(rng, 32, 32)
    cfg = CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.PROPOSED), frozenset())
    assert encrypt(img, cfg) == img


def test_conventional_keeps_gray(rng):
    for _ in range(5):
        img = gray_image(rng, 64, 32)
        enc = encrypt(img, CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.CONVENTIONAL))).data
        assert np.array_equal(enc[..., 0], enc[..., 1]) and np.array_equal(enc[..., 1], enc[..., 2])


@pytest.mark.parametrize("mode", list(Mode))
@pytest.mark.parametrize("block", [4, 8, 16, 32])
def test_round_trip(rng, mode, block):
    img = rand_image(rng, 64, 96)
    cfg = CipherConfig(BlockSpec.square(block), rand_keys(rng, mode))
    enc = encrypt(img, cfg)
    assert enc.data.shape == img.data.shape
    assert decrypt(enc, cfg) == img


def test_round_trip_with_crop(rng):
    img = rand_image(rng, 37, 29)
    cfg = CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.PROPOSED), allow_crop=True)
    enc = encrypt(img, cfg)
    assert enc.data.shape == (24, 32, 3)
    assert decrypt(enc, cfg) == img.crop(32, 24)


def test_decrypt_rejects_wrong_dimensions(rng):
    cfg = CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.PROPOSED))
    with pytest.raises(DimensionMismatch):
        decrypt(rand_image(rng, 30, 32), cfg)


def test_wrong_key_detected(rng):
    img = rand_image(rng, 32, 32)
    keys = rand_keys(rng, Mode.PROPOSED)
    cfg = CipherConfig(BlockSpec.square(8), keys)
    enc = encrypt(img, cfg)
    fields = ["k1", "k2", "k3", "k4", "k5"]
    for trial in range(100):
        name = fields[trial % 5]
        bit = 1 << int(rng.integers(0, 64))
        if name == "k5":
            bad = KeyBundle.proposed(keys.k1, keys.k2, keys.k3, keys.k4, keys.k5 ^ bit)
        else:
            parts = {f: getattr(keys, f) for f in fields[:4]}
            c = int(rng.integers(0, 3))
            parts[name] = tuple(k ^ bit if i == c else k for i, k in enumerate(parts[name]))
            bad = KeyBundle.proposed(*(parts[f] for f in fields[:4]), keys.k5)
        assert decrypt(enc, CipherConfig(cfg.spec, bad)) != img


def test_mode_collapse(rng):
    img = rand_image(rng, 32, 32)
    conv = rand_keys(rng, Mode.CONVENTIONAL)
    prop = KeyBundle.proposed(conv.k1, conv.k2, conv.k3, conv.k4, conv.k5)
    spec = BlockSpec.square(8)
    assert encrypt(img, CipherConfig(spec, conv)) == encrypt(img, CipherConfig(spec, prop))


def test_provenance_locates_plaintext(rng):
    img = rand_image(rng, 32, 32)
    cfg = CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.PROPOSED), {Step.POSITIONAL, Step.ROTATE_FLIP})
    grid = partition(img, cfg.spec)
    enc, rec = encrypt_grid(grid, cfg)
    src, d = provenance(rec)
    for c in range(3):
        for k in range(grid.block_count):
            want = dihedral.apply(int(d[c, k]), grid.tiles[c, src[c, k]])
            assert np.array_equal(enc.tiles[c, k], want)
    assert np.array_equal(decrypt_grid(enc, cfg).tiles, grid.tiles)


def test_negpos_mirrors_histogram(rng):
    img = rand_image(rng, 16, 16)
    grid = partition(img, BlockSpec.square(16))
    keys = next(k for k in (rand_keys(rng, Mode.PROPOSED) for _ in range(200))
                if negpos_transform(grid, k)[1].negpos[:, 0].all())
    out, _ = negpos_transform(grid, keys)
    for c in range(3):
        before = np.bincount(grid.tiles[c].ravel(), minlength=256)
        after = np.bincount(out.tiles[c].ravel(), minlength=256)
        assert np.array_equal(after, before[::-1])


def test_position_and_rotation_conserve_samples(rng):
    img = rand_image(rng, 32, 32)
    cfg = CipherConfig(BlockSpec.square(8), rand_keys(rng, Mode.PROPOSED), {Step.POSITIONAL, Step.ROTATE_FLIP})
    enc = encrypt(img, cfg).data
    for c in range(3):
        assert np.array_equal(np.sort(enc[..., c], axis=None), np.sort(img.data[..., c], axis=None))
