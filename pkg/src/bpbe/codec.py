"""Lossless LOCO-I style plane codec used to measure ciphertext bitrates.

Regular mode: MED prediction with per-context bias correction, the
modulo-reduced error mapped to a non-negative integer and written with a
length-limited Golomb-Rice code. Run mode: entered on flat neighbourhoods,
run lengths coded with the adaptive J-table code, followed by a
run-interruption sample. Parameters are the usual 8-bit lossless defaults
(T1/T2/T3 = 3/7/21, RESET 64, LIMIT 32).

Bits are written most-significant first; unary prefixes are zeros closed by
a one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import CorruptStream, RgbImage

MAXVAL = 255
RANGE = 256
QBPP = 8
LIMIT = 32
RESET = 64
T1, T2, T3 = 3, 7, 21
MIN_C, MAX_C = -128, 127
N_REGULAR = 365
RUN_CONTEXTS = 2
J = np.array(
    [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3,
     4, 4, 5, 5, 6, 6, 7, 7, 8, 9, 10, 11, 12, 13, 14, 15],
    dtype=np.int64,
)  # fmt: skip

MAGIC = b"LOCO"
_HEADER = struct.Struct("<4sIII")
_LENGTH = struct.Struct("<I")


@dataclass(frozen=True)
class CodecPlane:
    width: int
    height: int
    samples: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        s = np.ascontiguousarray(self.samples, dtype=np.uint8).reshape(self.height, self.width)
        object.__setattr__(self, "samples", s)

    def __eq__(self, other):
        if not isinstance(other, CodecPlane):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and bool(
            np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


def med_predict(a: int, b: int, c: int) -> int:
    """Median edge detector."""
    if c >= max(a, b):
        return min(a, b)
    if c <= min(a, b):
        return max(a, b)
    return a + b - c


# -- numba kernels ---------------------------------------------------------


@njit(cache=True)
def _med(a, b, c):
    if c >= max(a, b):
        return min(a, b)
    if c <= min(a, b):
        return max(a, b)
    return a + b - c


@njit(cache=True)
def _quantize(d):
    if d <= -T3:
        return -4
    if d <= -T2:
        return -3
    if d <= -T1:
        return -2
    if d < 0:
        return -1
    if d == 0:
        return 0
    if d < T1:
        return 1
    if d < T2:
        return 2
    if d < T3:
        return 3
    return 4


@njit(cache=True)
def _put(buf, st, value, nbits):
    # st: [byte position, bits used in current byte]
    for i in range(nbits - 1, -1, -1):
        if (value >> i) & 1:
            buf[st[0]] |= 1 << (7 - st[1])
        st[1] += 1
        if st[1] == 8:
            st[1] = 0
            st[0] += 1


@njit(cache=True)
def _put_zeros(buf, st, n):
    for _ in range(n):
        st[1] += 1
        if st[1] == 8:
            st[1] = 0
            st[0] += 1


@njit(cache=True)
def _put_golomb(buf, st, value, k, limit):
    hi = value >> k
    if hi < limit - QBPP - 1:
        _put_zeros(buf, st, hi)
        _put(buf, st, 1, 1)
        _put(buf, st, value & ((1 << k) - 1), k)
    else:
        _put_zeros(buf, st, limit - QBPP - 1)
        _put(buf, st, 1, 1)
        _put(buf, st, value - 1, QBPP)


@njit(cache=True)
def _get(buf, st, nbits):
    # st: [byte position, bit position, error flag]
    v = 0
    n = buf.shape[0]
    for _ in range(nbits):
        if st[0] >= n:
            st[2] = 1
            return 0
        v = (v << 1) | ((buf[st[0]] >> (7 - st[1])) & 1)
        st[1] += 1
        if st[1] == 8:
            st[1] = 0
            st[0] += 1
    return v


@njit(cache=True)
def _get_golomb(buf, st, k, limit):
    zeros = 0
    cap = limit - QBPP - 1
    while _get(buf, st, 1) == 0:
        if st[2]:
            return 0
        zeros += 1
        if zeros > cap:
            st[2] = 1
            return 0
    if zeros < cap:
        return (zeros << k) | _get(buf, st, k)
    return _get(buf, st, QBPP) + 1


@njit(cache=True)
def _contexts():
    n = N_REGULAR + RUN_CONTEXTS
    a = np.full(n, max(2, (RANGE + 32) // 64), dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    c = np.zeros(n, dtype=np.int64)
    cnt = np.ones(n, dtype=np.int64)
    nn = np.zeros(n, dtype=np.int64)
    return a, b, c, cnt, nn


@njit(cache=True)
def _context_index(d1, d2, d3):
    q1 = _quantize(d1)
    q2 = _quantize(d2)
    q3 = _quantize(d3)
    sign = 1
    if q1 < 0 or (q1 == 0 and q2 < 0) or (q1 == 0 and q2 == 0 and q3 < 0):
        q1, q2, q3 = -q1, -q2, -q3
        sign = -1
    return 81 * q1 + 9 * q2 + q3, sign


@njit(cache=True)
def _golomb_k(n, a):
    k = 0
    while (n << k) < a:
        k += 1
    return k


@njit(cache=True)
def _update_regular(q, err, A, B, C, N):
    B[q] += err
    A[q] += abs(err)
    if N[q] == RESET:
        A[q] >>= 1
        B[q] = B[q] >> 1 if B[q] >= 0 else -((1 - B[q]) >> 1)
        N[q] >>= 1
    N[q] += 1
    if B[q] <= -N[q]:
        B[q] += N[q]
        if C[q] > MIN_C:
            C[q] -= 1
        if B[q] <= -N[q]:
            B[q] = -N[q] + 1
    elif B[q] > 0:
        B[q] -= N[q]
        if C[q] < MAX_C:
            C[q] += 1
        if B[q] > 0:
            B[q] = 0


@njit(cache=True)
def _reduce(err):
    if err < 0:
        err += RANGE
    if err >= (RANGE + 1) // 2:
        err -= RANGE
    return err


@njit(cache=True)
def _wrap(x):
    if x < 0:
        return x + RANGE
    if x > MAXVAL:
        return x - RANGE
    return x


@njit(cache=True)
def _ri_k(q, ritype, A, N):
    temp = A[q] + (N[q] >> 1) if ritype else A[q]
    return _golomb_k(N[q], temp)


@njit(cache=True)
def _update_ri(q, err, em, ritype, A, N, Nn):
    if err < 0:
        Nn[q] += 1
    A[q] += (em + 1 - ritype) >> 1
    if N[q] == RESET:
        A[q] >>= 1
        N[q] >>= 1
        Nn[q] >>= 1
    N[q] += 1


@njit(cache=True)
def _encode(img):
    h, w = img.shape
    buf = np.zeros(h * w * 8 + 64, dtype=np.uint8)
    st = np.zeros(2, dtype=np.int64)
    A, B, C, N, Nn = _contexts()
    ri = 0
    prev = np.zeros(w + 2, dtype=np.int64)
    cur = np.zeros(w + 2, dtype=np.int64)
    for y in range(h):
        cur[0] = prev[1]
        x = 0
        while x < w:
            ra = cur[x]
            rb = prev[x + 1]
            rc = prev[x]
            rd = prev[x + 2]
            d1, d2, d3 = rd - rb, rb - rc, rc - ra
            if d1 == 0 and d2 == 0 and d3 == 0:
                cnt = 0
                while x + cnt < w and img[y, x + cnt] == ra:
                    cur[x + cnt + 1] = ra
                    cnt += 1
                eol = x + cnt == w
                rem = cnt
                while rem >= (1 << J[ri]):
                    _put(buf, st, 1, 1)
                    rem -= 1 << J[ri]
                    if ri < 31:
                        ri += 1
                if eol:
                    if rem > 0:
                        _put(buf, st, 1, 1)
                else:
                    _put(buf, st, 0, 1)
                    _put(buf, st, rem, J[ri])
                x += cnt
                if eol:
                    break
                # run interruption sample
                rb = prev[x + 1]
                ix = np.int64(img[y, x])
                ritype = 1 if ra == rb else 0
                px = ra if ritype else rb
                err = ix - px
                if ritype == 0 and ra > rb:
                    err = -err
                err = _reduce(err)
                q = N_REGULAR + ritype
                k = _ri_k(q, ritype, A, N)
                amap = 0
                if k == 0 and err > 0 and 2 * Nn[q] < N[q]:
                    amap = 1
                elif err < 0 and (2 * Nn[q] >= N[q] or k != 0):
                    amap = 1
                em = 2 * abs(err) - ritype - amap
                _put_golomb(buf, st, em, k, LIMIT - J[ri] - 1)
                _update_ri(q, err, em, ritype, A, N, Nn)
                if ri > 0:
                    ri -= 1
                cur[x + 1] = ix
                x += 1
                continue
            q, sign = _context_index(d1, d2, d3)
            px = _med(ra, rb, rc) + sign * C[q]
            px = min(max(px, 0), MAXVAL)
            ix = np.int64(img[y, x])
            err = ix - px
            if sign < 0:
                err = -err
            err = _reduce(err)
            k = _golomb_k(N[q], A[q])
            if k == 0 and 2 * B[q] <= -N[q]:
                merr = 2 * err + 1 if err >= 0 else -2 * (err + 1)
            else:
                merr = 2 * err if err >= 0 else -2 * err - 1
            _put_golomb(buf, st, merr, k, LIMIT)
            _update_regular(q, err, A, B, C, N)
            cur[x + 1] = ix
            x += 1
        cur[w + 1] = cur[w]
        prev, cur = cur, prev
    nbytes = st[0] + (1 if st[1] else 0)
    return buf[:nbytes].copy()


@njit(cache=True)
def _decode(buf, h, w):
    out = np.zeros((h, w), dtype=np.uint8)
    st = np.zeros(3, dtype=np.int64)
    A, B, C, N, Nn = _contexts()
    ri = 0
    prev = np.zeros(w + 2, dtype=np.int64)
    cur = np.zeros(w + 2, dtype=np.int64)
    for y in range(h):
        cur[0] = prev[1]
        x = 0
        while x < w:
            if st[2]:
                return out, st
            ra = cur[x]
            rb = prev[x + 1]
            rc = prev[x]
            rd = prev[x + 2]
            d1, d2, d3 = rd - rb, rb - rc, rc - ra
            if d1 == 0 and d2 == 0 and d3 == 0:
                cnt = 0
                eol = False
                while True:
                    bit = _get(buf, st, 1)
                    if st[2]:
                        return out, st
                    if bit == 1:
                        step = 1 << J[ri]
                        if x + cnt + step <= w:
                            cnt += step
                            if ri < 31:
                                ri += 1
                            if x + cnt == w:
                                eol = True
                                break
                        else:
                            cnt = w - x
                            eol = True
                            break
                    else:
                        cnt += _get(buf, st, J[ri])
                        if st[2] or x + cnt >= w:
                            st[2] = 1
                            return out, st
                        break
                for i in range(cnt):
                    out[y, x + i] = ra
                    cur[x + i + 1] = ra
                x += cnt
                if eol:
                    break
                rb = prev[x + 1]
                ritype = 1 if ra == rb else 0
                px = ra if ritype else rb
                q = N_REGULAR + ritype
                k = _ri_k(q, ritype, A, N)
                em = _get_golomb(buf, st, k, LIMIT - J[ri] - 1)
                if st[2]:
                    return out, st
                t = em + ritype
                amap = t & 1
                mag = (t + amap) >> 1
                cond = 1 if (k == 0 and 2 * Nn[q] < N[q]) else 0
                err = mag if amap == cond else -mag
                if mag > RANGE // 2 or (err == 0 and ritype == 1):
                    st[2] = 1
                    return out, st
                _update_ri(q, err, em, ritype, A, N, Nn)
                if ri > 0:
                    ri -= 1
                if ritype == 0 and ra > rb:
                    err = -err
                ix = _wrap(px + err)
                out[y, x] = ix
                cur[x + 1] = ix
                x += 1
                continue
            q, sign = _context_index(d1, d2, d3)
            px = _med(ra, rb, rc) + sign * C[q]
            px = min(max(px, 0), MAXVAL)
            k = _golomb_k(N[q], A[q])
            merr = _get_golomb(buf, st, k, LIMIT)
            if st[2]:
                return out, st
            if merr > 255:
                st[2] = 1
                return out, st
            if k == 0 and 2 * B[q] <= -N[q]:
                err = (merr - 1) >> 1 if merr & 1 else -((merr + 2) >> 1)
            else:
                err = -((merr + 1) >> 1) if merr & 1 else merr >> 1
            _update_regular(q, err, A, B, C, N)
            if sign < 0:
                err = -err
            ix = _wrap(px + err)
            out[y, x] = ix
            cur[x + 1] = ix
            x += 1
        cur[w + 1] = cur[w]
        prev, cur = cur, prev
    return out, st


# -- public API ------------------------------------------------------------


def encode_plane(plane: CodecPlane) -> bytes:
    if plane.width == 0 or plane.height == 0:
        raise ValueError("empty plane")
    return _encode(plane.samples).tobytes()


def decode_plane(stream: bytes, width: int, height: int) -> CodecPlane:
    buf = np.frombuffer(bytes(stream), dtype=np.uint8)
    samples, st = _decode(buf, height, width)
    if st[2]:
        raise CorruptStream("bitstream truncated or invalid")
    consumed = int(st[0]) + (1 if st[1] else 0)
    if consumed != len(buf):
        raise CorruptStream(f"{len(buf) - consumed} trailing bytes after plane data")
    return CodecPlane(width, height, samples)


def image_planes(image: RgbImage) -> list[CodecPlane]:
    return [CodecPlane(image.width, image.height, image.data[:, :, c]) for c in range(3)]


def encode_image(image: RgbImage) -> bytes:
    """Container: little-endian header then length-prefixed R, G, B plane streams."""
    parts = [_HEADER.pack(MAGIC, image.width, image.height, 3)]
    for plane in image_planes(image):
        data = encode_plane(plane)
        parts += [_LENGTH.pack(len(data)), data]
    return b"".join(parts)


def decode_image(blob: bytes) -> RgbImage:
    if len(blob) < _HEADER.size:
        raise CorruptStream("container shorter than its header")
    magic, width, height, count = _HEADER.unpack_from(blob)
    if magic != MAGIC or count != 3 or width == 0 or height == 0:
        raise CorruptStream("bad container header")
    off = _HEADER.size
    planes = []
    for _ in range(count):
        if off + _LENGTH.size > len(blob):
            raise CorruptStream("container truncated")
        (n,) = _LENGTH.unpack_from(blob, off)
        off += _LENGTH.size
        if off + n > len(blob):
            raise CorruptStream("container truncated")
        planes.append(decode_plane(blob[off : off + n], width, height).samples)
        off += n
    if off != len(blob):
        raise CorruptStream("trailing bytes after last plane")
    return RgbImage(np.stack(planes, axis=-1))


def bitrate(image: RgbImage) -> float:
    """Compressed bits per pixel with the three planes coded independently."""
    total = sum(len(encode_plane(p)) for p in image_planes(image))
    return total * 8 / (image.width * image.height)
