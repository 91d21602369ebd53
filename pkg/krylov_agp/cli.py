"""
Command-line entry point.

    krylov-agp lanczos --model ising_periodic --param L=6 --param h=1
    krylov-agp sweep --config xxz.json --threads 4 --out xxz.csv
    krylov-agp truncation-report --config report.json --print-config

Flags override the keys of the ``--config`` document; the merged document
is validated by ``ExperimentConfig.from_dict``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from typing import Any

from krylov_agp import __version__
from krylov_agp.config import COMMANDS, FULL, ExperimentConfig, load_config
from krylov_agp.errors import KrylovAgpError, exit_code_for
from krylov_agp.runner import RUNNERS, write_result

logger = logging.getLogger(__name__)

__all__ = ["build_parser", "main", "merge_flags"]

EXIT_INTERRUPTED = 130


def _scalar(text: str) -> Any:
    """JSON literal if it parses, the raw string otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _key_value(text: str) -> tuple[str, Any]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), _scalar(value.strip())


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _truncate(text: str) -> list[int | str]:
    out: list[int | str] = []
    for item in _csv_list(text):
        if item == FULL:
            out.append(FULL)
        elif "-" in item.lstrip("-"):
            lo, _, hi = item.partition("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(item))
    return out


def _sweep(text: str) -> dict[str, Any]:
    """``param=from:to:steps``"""
    key, sep, rest = text.partition("=")
    bounds = rest.split(":")
    if not sep or len(bounds) != 3:
        raise argparse.ArgumentTypeError(f"expected param=from:to:steps, got {text!r}")
    try:
        return {
            "parameter": key.strip(),
            "from": float(bounds[0]),
            "to": float(bounds[1]),
            "steps": int(bounds[2]),
        }
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep bounds in {text!r}") from None


def _shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment document")
    parser.add_argument("--model", help="model name")
    parser.add_argument(
        "--param", action="append", type=_key_value, default=[], metavar="KEY=VALUE"
    )
    parser.add_argument("--mu", help="regulator: auto or a non-negative float")
    parser.add_argument("--truncate", type=_truncate, help="e.g. 0-8,full")
    parser.add_argument("--method", type=_csv_list, help="krylov,exact,autocorr")
    parser.add_argument("--sweep", type=_sweep, metavar="PARAM=FROM:TO:STEPS")
    parser.add_argument("--out", help="output path, '-' for stdout")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--threads", type=int)
    parser.add_argument("--seed", type=int, help="reserved; every algorithm is deterministic")
    parser.add_argument("--normalized", action="store_true", default=None)
    parser.add_argument("--print-config", action="store_true")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krylov-agp",
        description="Adiabatic gauge potentials from operator-space Lanczos coefficients.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        _shared(p)
        if command == "scaling":
            p.add_argument("--family")
            p.add_argument(
                "--family-param", action="append", type=_key_value, default=[],
                metavar="KEY=VALUE",
            )
            p.add_argument("--sizes", type=lambda s: [int(x) for x in _csv_list(s)])
            p.add_argument("--scaling-method", choices=("auto", "closed", "quadrature"))
    return parser


def merge_flags(doc: dict[str, Any], args: argparse.Namespace) -> dict[str, Any]:
    """Overlay parsed flags on a config document; unset flags leave keys alone."""
    merged = dict(doc)
    merged["command"] = args.command
    if args.model is not None:
        if merged.get("model") != args.model:
            merged["params"] = {}
        merged["model"] = args.model
    if args.param:
        merged["params"] = {**merged.get("params", {}), **dict(args.param)}
    if args.mu is not None:
        merged["mu"] = args.mu if args.mu == "auto" else _scalar(args.mu)
    simple = {
        "truncate": args.truncate,
        "methods": args.method,
        "sweep": args.sweep,
        "out": args.out,
        "format": args.format,
        "threads": args.threads,
        "seed": args.seed,
        "normalized": args.normalized,
        "family": getattr(args, "family", None),
        "sizes": getattr(args, "sizes", None),
        "scaling_method": getattr(args, "scaling_method", None),
    }
    merged.update({k: v for k, v in simple.items() if v is not None})
    family_params = getattr(args, "family_param", None)
    if family_params:
        merged["family_params"] = {**merged.get("family_params", {}), **dict(family_params)}
    return merged


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        doc: dict[str, Any] = {}
        source = None
        if args.config:
            doc, source = load_config(args.config)
        cfg = ExperimentConfig.from_dict(merge_flags(doc, args), source)
        if args.print_config:
            sys.stdout.write(cfg.to_json() + "\n")
            return 0
        result = RUNNERS[cfg.command](cfg)
        write_result(cfg, result)
    except KeyboardInterrupt:
        logger.error("interrupted")
        return EXIT_INTERRUPTED
    except KrylovAgpError as e:
        logger.error(str(e))
        return exit_code_for(e)

    if result.interrupted:
        logger.warning("sweep interrupted; wrote the completed prefix")
        return EXIT_INTERRUPTED
    return 0


if __name__ == "__main__":
    sys.exit(main())
