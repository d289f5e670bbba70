"""Human-readable key files and seed-based key generation.

Format, one ``name = value`` per line, ``#`` comments allowed::

    mode = proposed
    K1R = 0x0123456789abcdef
    ...
    K5 = 0x...

Proposed mode lists K1R..K4B and K5 (13 subkeys); conventional mode lists
K1..K5.
"""

from __future__ import annotations

from .core import KeyBundle, Mode
from .keystream import Stream

CHANNEL_NAMES = "RGB"


def derive_keys(mode: Mode, seed: int) -> KeyBundle:
    """Subkeys are successive outputs of ``stream_new(seed)`` in file order."""
    s = Stream(seed)
    if mode is Mode.CONVENTIONAL:
        return KeyBundle.conventional(*(s.next_u64() for _ in range(5)))
    per_channel = [tuple(s.next_u64() for _ in range(3)) for _ in range(4)]
    return KeyBundle.proposed(*per_channel, s.next_u64())


def format_keys(keys: KeyBundle) -> str:
    lines = [f"mode = {keys.mode.value}"]
    for p in range(1, 5):
        channel = keys.channel_keys(p)
        if keys.mode is Mode.CONVENTIONAL:
            lines.append(f"K{p} = {channel[0]:#018x}")
        else:
            lines += [f"K{p}{c} = {k:#018x}" for c, k in zip(CHANNEL_NAMES, channel)]
    lines.append(f"K5 = {keys.k5:#018x}")
    return "\n".join(lines) + "\n"


def parse_keys(text: str) -> KeyBundle:
    fields = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {n}: expected 'name = value'")
        fields[name.strip().upper()] = value.strip().strip('"')
    try:
        mode = Mode(fields.pop("MODE").lower())
    except KeyError:
        raise ValueError("key file has no mode line") from None

    def take(name):
        try:
            return int(fields.pop(name), 16)
        except KeyError:
            raise ValueError(f"key file lacks {name}") from None

    if mode is Mode.CONVENTIONAL:
        keys = KeyBundle.conventional(*(take(f"K{p}") for p in range(1, 6)))
    else:
        per_channel = [tuple(take(f"K{p}{c}") for c in CHANNEL_NAMES) for p in range(1, 5)]
        keys = KeyBundle.proposed(*per_channel, take("K5"))
    if fields:
        raise ValueError(f"unexpected entries in key file: {sorted(fields)}")
    return keys
