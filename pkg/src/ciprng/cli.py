"""Command-line front end.

Exit codes: 0 all tests pass, 2 configuration error, 3 I/O error, 4 statistical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from ciprng.bitstream import InsufficientData
from ciprng.config import ConfigError, RunConfig
from ciprng.pipeline import generate_files, run_test, scan_power

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_FAIL = 0, 2, 3, 4


def _threads() -> int:
    raw = os.environ.get("CIPRNG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CIPRNG_THREADS: not an integer: {raw!r}") from None


def _parse_scan(text: str) -> tuple[int, int]:
    match = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not match:
        raise ConfigError(f"--scan: expected M_LO..M_HI, got {text!r}")
    lo, hi = int(match[1]), int(match[2])
    if lo < 1 or hi < lo:
        raise ConfigError(f"--scan: empty power range {text!r}")
    return lo, hi


def _load(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config, args.seed_override)
    if getattr(args, "tests", None):
        from ciprng.stattests import BatteryConfig

        tests = tuple(t.strip() for t in args.tests.split(",") if t.strip())
        try:
            BatteryConfig(tests=tests)
        except ValueError as exc:
            raise ConfigError(f"--tests: {exc}") from None
        cfg.tests = tests
    return cfg


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def cmd_generate(args) -> int:
    cfg = _load(args)
    fmt = args.format or cfg.out_format
    out = args.out or cfg.out_dir
    if not out:
        raise ConfigError("--out: no output directory given")
    files = generate_files(cfg, fmt, out)
    print(f"wrote {len(files)} file(s) and manifest.json to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_test(args) -> int:
    cfg = _load(args)
    report = run_test(cfg, _threads())
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_scan_power(args) -> int:
    cfg = _load(args)
    if args.scan:
        lo, hi = _parse_scan(args.scan)
    elif cfg.scan:
        lo, hi = cfg.scan
    else:
        raise ConfigError("--scan: no power range given")
    result = scan_power(cfg, lo, hi, _threads())
    _emit(result.to_dict())
    return EXIT_OK if result.threshold is not None else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ciprng", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH")
    common.add_argument("--seed-override", type=int, metavar="N",
                        help="reseed every generator in the tree with N, N+1, ...")

    gen = sub.add_parser("generate", parents=[common], help="export a corpus for external suites")
    gen.add_argument("--format", choices=["ascii", "binary"])
    gen.add_argument("--out", metavar="DIR")
    gen.set_defaults(func=cmd_generate)

    test = sub.add_parser("test", parents=[common], help="run the battery and print a JSON report")
    test.add_argument("--tests", metavar="LIST", help="comma-separated test names")
    test.set_defaults(func=cmd_test)

    scan = sub.add_parser("scan-power", parents=[common], help="battery score for each functional power")
    scan.add_argument("--scan", metavar="M_LO..M_HI")
    scan.add_argument("--tests", metavar="LIST", help="comma-separated test names")
    scan.set_defaults(func=cmd_scan_power)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InsufficientData) as exc:
        if isinstance(exc, ConfigError):
            kind, message = "config", str(exc)
        else:
            kind, message = "data", f"InsufficientData: {exc}"
        _emit({"error": {"kind": kind, "message": message}})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        _emit({"error": {"kind": "io", "message": str(exc)}})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
