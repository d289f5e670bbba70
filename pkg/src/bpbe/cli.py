"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 domain error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import codec, keyfile, metrics, ppm
from .cipher import CipherConfig, decrypt, encrypt
from .core import BlockSpec, BpbeError, KeyBundle, Mode
from .jps import evaluate_attack
from .keyspace import keyspace_for_image

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _hex(text: str) -> int:
    try:
        return int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex value: {text!r}") from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _read_keys(path) -> KeyBundle:
    return keyfile.parse_keys(Path(path).read_text())


def _config(args) -> CipherConfig:
    return CipherConfig(BlockSpec.square(args.block), _read_keys(args.keys), allow_crop=args.crop)


def cmd_keygen(args):
    keys = keyfile.derive_keys(Mode(args.mode), args.seed)
    ppm.write_atomic(args.out, keyfile.format_keys(keys).encode())


def cmd_encrypt(args):
    ppm.write_ppm(args.out, encrypt(ppm.read_ppm(args.input), _config(args)))


def cmd_decrypt(args):
    image = ppm.read_ppm(args.input)
    config = _config(args)
    ppm.write_ppm(args.out, decrypt(image, config))


def cmd_keyspace(args):
    report = keyspace_for_image(args.width, args.height, BlockSpec.square(args.block), args.mode)
    sys.stdout.write(report.to_text())


def cmd_metrics(args):
    image = ppm.read_ppm(args.input)
    sys.stdout.write(metrics.metric_csv({"entropy24": metrics.entropy24(image)}))


def cmd_histogram(args):
    hist = metrics.hue_sat_histogram(ppm.read_ppm(args.input), args.bins)
    ppm.write_atomic(args.out, metrics.histogram_csv(hist).encode())


def cmd_attack(args):
    image = ppm.read_ppm(args.input)
    # keys for each trial are derived from --seed; the bundle only fixes the mode
    mode = Mode(args.mode)
    placeholder = keyfile.derive_keys(mode, 0)
    config = CipherConfig(BlockSpec.square(args.block), placeholder, allow_crop=args.crop)
    report = evaluate_attack(image, config, trials=args.trials, seed=args.seed)
    text = report.to_csv()
    if args.out:
        ppm.write_atomic(args.out, text.encode())
    else:
        sys.stdout.write(text)
    if args.image:
        ppm.write_ppm(args.image, report.best_image)


def cmd_compress(args):
    image = ppm.read_ppm(args.input)
    if args.out:
        ppm.write_atomic(args.out, codec.encode_image(image))
    print(f"bpp,{codec.bitrate(image):.4f}")


def cmd_decompress(args):
    ppm.write_ppm(args.out, codec.decode_image(Path(args.input).read_bytes()))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bpbe", description="Block-permutation image encryption toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("keygen", help="derive a key file from a seed")
    s.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    s.add_argument("--seed", type=_hex, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_keygen)

    for name, func in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        s = sub.add_parser(name)
        s.add_argument("--in", dest="input", required=True)
        s.add_argument("--keys", required=True)
        s.add_argument("--block", type=_positive, required=True)
        s.add_argument("--crop", action="store_true", help="drop right/bottom remainder pixels")
        s.add_argument("--out", required=True)
        s.set_defaults(func=func)

    s = sub.add_parser("keyspace")
    s.add_argument("--width", type=_positive, required=True)
    s.add_argument("--height", type=_positive, required=True)
    s.add_argument("--block", type=_positive, required=True)
    s.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    s.set_defaults(func=cmd_keyspace)

    s = sub.add_parser("metrics", help="24-bit colour entropy")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("histogram", help="hue-saturation histogram as CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--bins", type=int, default=256)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_histogram)

    s = sub.add_parser("attack", help="jigsaw-solver attack over fresh-key trials")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--block", type=_positive, default=32)
    s.add_argument("--trials", type=_positive, default=10)
    s.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    s.add_argument("--seed", type=_hex, default=0)
    s.add_argument("--crop", action="store_true")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--image", help="write the best assembly as PPM")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("compress", help="print lossless bitrate; optionally write the stream")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compress)

    s = sub.add_parser("decompress")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_decompress)
    return p


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "bins", 2) < 2:
            raise UsageError("--bins must be >= 2")
        args.func(args)
    except UsageError as exc:
        print(f"bpbe: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BpbeError as exc:
        print(f"bpbe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ppm.PpmError as exc:
        print(f"bpbe: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"bpbe: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed key files and similar bad inputs
        print(f"bpbe: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
