import math

import pytest

from bpbe import BlockSpec, Mode
from bpbe.keyspace import (
    decimal_digits,
    keyspace_conventional,
    keyspace_for_image,
    keyspace_proposed,
    log2_int,
)


def oracle_log2_proposed(L):
    terms = [3 * math.log2(k) for k in range(2, L + 1)]
    terms += [L * 9.0, L * 3.0, L * math.log2(6)]
    return math.fsum(terms)


def test_small_values():
    assert keyspace_proposed(1).n_a == 24576
    assert keyspace_proposed(2).n_a == 4_831_838_208
    assert keyspace_conventional(1).n_a == 96
    assert keyspace_conventional(2).n_a == 18432
    assert keyspace_proposed(2).n_a // keyspace_conventional(2).n_a == 262144


def test_components():
    r = keyspace_proposed(5)
    assert (r.n_p, r.n_d, r.n_n, r.n_c) == (120**3, 512**5, 8**5, 6**5)
    assert r.n_a == r.n_p * r.n_d * r.n_n * r.n_c
    c = keyspace_conventional(5)
    assert (c.n_p, c.n_d, c.n_n, c.n_c) == (120, 8**5, 2**5, 6**5)


@pytest.mark.parametrize("L", range(1, 65))
def test_ratio_identity(L):
    f = math.factorial(L)
    assert keyspace_proposed(L).n_a == keyspace_conventional(L).n_a * f**2 * 64**L * 4**L


@pytest.mark.parametrize("L", [1, 2, 7, 64, 240, 1024, 16384])
def test_log2_against_summation(L):
    assert abs(keyspace_proposed(L).log2_n_a - oracle_log2_proposed(L)) < 1e-6 * max(1, L / 1024)


def test_monotone():
    for fn in (keyspace_proposed, keyspace_conventional):
        values = [fn(L).n_a for L in range(1, 40)]
        assert all(a < b for a, b in zip(values, values[1:]))


def test_invalid_count():
    with pytest.raises(ValueError):
        keyspace_proposed(0)
    with pytest.raises(ValueError):
        log2_int(0)


def test_for_image_and_text():
    r = keyspace_for_image(512, 512, BlockSpec.square(16), Mode.PROPOSED)
    assert r.L == 1024
    text = r.to_text()
    assert f"n_a={decimal_digits(r.n_a)}" in text.splitlines()
    assert len(decimal_digits(r.n_a)) > 12000
