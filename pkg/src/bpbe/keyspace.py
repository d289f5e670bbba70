"""Exact key-space sizes of the conventional and per-channel schemes."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .core import BlockSpec, Mode, block_count


@dataclass(frozen=True)
class KeySpaceReport:
    mode: str
    L: int
    n_p: int  # positional scrambling
    n_d: int  # rotation/flip
    n_n: int  # negative-positive
    n_c: int  # colour shuffle

    @property
    def n_a(self) -> int:
        return self.n_p * self.n_d * self.n_n * self.n_c

    @property
    def log2_n_a(self) -> float:
        return log2_int(self.n_a)

    def to_text(self) -> str:
        lines = [f"mode={self.mode}", f"L={self.L}"]
        for name in ("n_p", "n_d", "n_n", "n_c", "n_a"):
            value = getattr(self, name)
            lines.append(f"{name}={decimal_digits(value)}")
            lines.append(f"log2_{name}={log2_int(value):.6f}")
        return "\n".join(lines) + "\n"


def decimal_digits(n: int) -> str:
    """Exact decimal text, bypassing the interpreter's int-to-str digit cap."""
    if not hasattr(sys, "get_int_max_str_digits"):
        return str(n)
    limit = sys.get_int_max_str_digits()
    sys.set_int_max_str_digits(0)
    try:
        return str(n)
    finally:
        sys.set_int_max_str_digits(limit)


def log2_int(n: int) -> float:
    """log2 of an arbitrarily large positive integer without float overflow."""
    if n <= 0:
        raise ValueError("log2 of non-positive value")
    shift = max(n.bit_length() - 64, 0)
    return shift + math.log2(n >> shift)


def _check(L: int) -> None:
    if L < 1:
        raise ValueError("block count L must be >= 1")


def keyspace_proposed(L: int) -> KeySpaceReport:
    _check(L)
    return KeySpaceReport("proposed", L, math.factorial(L) ** 3, 512**L, 8**L, 6**L)


def keyspace_conventional(L: int) -> KeySpaceReport:
    _check(L)
    return KeySpaceReport("conventional", L, math.factorial(L), 8**L, 2**L, 6**L)


def keyspace_for_image(width: int, height: int, spec: BlockSpec, mode: Mode | str) -> KeySpaceReport:
    L = block_count(width, height, spec)
    fn = {Mode.PROPOSED: keyspace_proposed, Mode.CONVENTIONAL: keyspace_conventional}[Mode(mode)]
    return fn(L)
