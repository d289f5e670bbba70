"""Binary PPM (P6, maxval 255) reading and writing."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .core import RgbImage


class PpmError(ValueError):
    pass


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PpmError("truncated PPM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_ppm(data: bytes) -> RgbImage:
    tokens, offset = _tokens(data, 4)
    if tokens[0] != b"P6":
        raise PpmError(f"unsupported magic {tokens[0]!r}; only P6 is handled")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PpmError("malformed PPM header") from None
    if maxval != 255:
        raise PpmError(f"maxval {maxval} unsupported; only 8-bit (255)")
    size = width * height * 3
    raster = data[offset : offset + size]
    if len(raster) != size or width == 0 or height == 0:
        raise PpmError("PPM raster truncated")
    return RgbImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3))


def encode_ppm(image: RgbImage) -> bytes:
    return f"P6\n{image.width} {image.height}\n255\n".encode() + image.data.tobytes()


def read_ppm(path) -> RgbImage:
    return decode_ppm(Path(path).read_bytes())


def write_atomic(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_ppm(path, image: RgbImage) -> None:
    write_atomic(path, encode_ppm(image))
