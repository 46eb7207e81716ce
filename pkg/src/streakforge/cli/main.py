"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/configuration error,
3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import yaml

from ..corpus import CorpusError
from .config import ConfigError, load_config
from .pipeline import PipelineError, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_DATA_ERRORS = (CorpusError, ConfigError, FileNotFoundError, KeyError, yaml.YAMLError)

SUBCOMMANDS = (
    "ingest", "synth", "detect", "classify", "metrics", "fit", "stats",
    "report", "all",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="streakforge",
        description=(
            "Career-sequence analytics: detect consecutive successes, "
            "characterize the collaboration behind them, and replicate the "
            "moving-average model on synthetic corpora."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the pipeline through the {name} stage")
        p.add_argument("config", help="path to the YAML configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--workers", type=int, default=None, help="worker count")
        p.add_argument("--out-dir", default=None, help="override the output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.out_dir is not None:
            overrides["out_dir"] = args.out_dir
            # corpus paths derived under the old out_dir move with it
            from pathlib import Path

            old_out = Path(config.out_dir)
            for name in ("papers_path", "citations_path"):
                p = Path(getattr(config, name))
                if p.is_relative_to(old_out):
                    overrides[name] = str(Path(args.out_dir) / p.relative_to(old_out))
        if overrides:
            config = dataclasses.replace(config, **overrides)
        run_pipeline(config, args.command)
    except PipelineError as exc:
        print(f"streakforge: {exc}", file=sys.stderr)
        if isinstance(exc.cause, _DATA_ERRORS):
            return EXIT_DATA
        return EXIT_INTERNAL
    except _DATA_ERRORS as exc:
        print(f"streakforge: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"streakforge: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
