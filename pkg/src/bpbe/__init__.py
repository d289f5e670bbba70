"""Block-permutation-based image encryption for encryption-then-compression.

Conventional (shared channel keys) and per-channel key variants, with
key-space analysis, a jigsaw-solver attack harness, colour statistics and a
lossless predictive codec for bitrate comparison.
"""

from .cipher import CipherConfig, Step, decrypt, encrypt
from .core import (
    BlockGrid,
    BlockSpec,
    BpbeError,
    CorruptStream,
    CountMismatch,
    DimensionMismatch,
    KeyBundle,
    Mode,
    NonSquareBlock,
    RgbImage,
    ShapeMismatch,
    SizeMismatch,
    assemble,
    partition,
)

__all__ = [
    "BlockGrid",
    "BlockSpec",
    "BpbeError",
    "CipherConfig",
    "CorruptStream",
    "CountMismatch",
    "DimensionMismatch",
    "KeyBundle",
    "Mode",
    "NonSquareBlock",
    "RgbImage",
    "ShapeMismatch",
    "SizeMismatch",
    "Step",
    "assemble",
    "decrypt",
    "encrypt",
    "partition",
]
