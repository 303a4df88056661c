"""Command line entry point: ``metaqnn {sweep,train,spectrum,validate}``.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 validation failure.
"""

import argparse
import json
import logging
import sys

from .errors import NumericalError, ParameterError
from .experiments import MODES, RUNNERS, ConfigError, ValidationFailure, load_config, parse_config_text

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3

log = logging.getLogger("metaqnn")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metaqnn", description="Dissipative quantum neural network experiments.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for mode in MODES:
        s = sub.add_parser(mode)
        s.add_argument("--config", metavar="PATH", help="key-value config file (section.key = value)")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides run.output_dir)")
        s.add_argument("--seed", type=int, help="RNG seed (overrides run.seed)")
        s.add_argument("--threads", type=int, help="worker threads for sweeps")
        s.add_argument("--long-running", action="store_true", help="allow paper-scale network sizes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = dict(
        mode=args.command,
        output_dir=args.out,
        seed=args.seed,
        threads=args.threads,
        long_running=True if args.long_running else None,
    )
    try:
        if args.config:
            cfg = load_config(args.config, **overrides)
        else:
            cfg = parse_config_text("", **overrides)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = RUNNERS[cfg.mode](cfg)
    except ValidationFailure as exc:
        for c in exc.report["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['check']}", file=sys.stderr)
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
