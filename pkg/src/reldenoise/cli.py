"""Command-line entry point.

One subcommand per pipeline stage plus `pipeline` to chain them. All
subcommands share the same config handling: an optional YAML file (or the
RELDENOISE_CONFIG environment variable) plus any number of
`--set key.path=value` overrides.

Exit codes: 0 success, 2 config error, 3 missing input, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import ConfigError, MissingInputError, PipelineError
from .pipeline import STAGES

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_INPUT = 3
EXIT_RUNTIME = 4

CONFIG_ENV_VAR = "RELDENOISE_CONFIG"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reldenoise",
        description="Build a denoised relation-extraction corpus from dated "
                    "news and event descriptions, emit corrupted training "
                    "batches, and evaluate embeddings few-shot.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (-v info, -vv debug)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"YAML config file (default: ${CONFIG_ENV_VAR} if set)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY.PATH=VALUE",
                        help="override one config value; repeatable")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes for corpus scans (output is "
                             "identical for any worker count)")
    common.add_argument("--seed", default=None,
                        help="override the run seed")

    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "extract": "parse the corpus and write candidate relation statements",
        "stats": "count per-day article co-occurrence statistics",
        "pair": "select entity pairs by the configured strategy",
        "groups": "assemble per-pair training groups with negatives",
        "batches": "corrupt groups and write training batches",
        "eval": "few-shot nearest-neighbor evaluation of an embedding file",
        "pipeline": "run every stage in order over one config",
    }
    for name, desc in descriptions.items():
        sub.add_parser(name, parents=[common], help=desc, description=desc)
    return parser


def _effective_overrides(args: argparse.Namespace) -> tuple[str, ...]:
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return tuple(overrides)


CHAIN_ORDER = ("extract", "stats", "pair", "groups", "batches", "eval")


def _print_result(command: str, manifest: dict):
    if command == "pipeline":
        for stage in CHAIN_ORDER:
            if stage not in manifest:
                continue
            counts = manifest[stage].get("counts", {})
            flat = " ".join(f"{k}={v}" for k, v in sorted(counts.items())
                            if not isinstance(v, dict))
            print(f"{stage}: {flat}")
        return
    if command == "eval":
        report = manifest["report"]
        print(f"mean_accuracy={report['mean_accuracy']:.6f}")
        per_trial = " ".join(f"{acc:.4f}" for acc in report["per_trial_accuracy"])
        print(f"per_trial {per_trial}")
        return
    counts = manifest.get("counts", {})
    flat = " ".join(f"{k}={v}" for k, v in sorted(counts.items())
                    if not isinstance(v, dict))
    print(f"{command}: {flat}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")

    config_path = args.config
    if config_path is None:
        config_path = os.environ.get(CONFIG_ENV_VAR) or None
    try:
        cfg = load_config(config_path, _effective_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stage = STAGES[args.command]
    try:
        manifest = stage(cfg)
    except MissingInputError as exc:
        print(f"{args.command}: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except ConfigError as exc:
        print(f"{args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if args.command == "pipeline":
        _print_result("pipeline", manifest)
    else:
        _print_result(args.command, manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
