"""Command-line entry point.

Usage: ``knowdis <stage> --config <file> [--repeats N] [--seed S]
[--workers W]`` plus the ``synth`` utility that writes a synthetic
fixture set. Exit codes: 0 success, 2 configuration error, 3 missing
upstream stage, 1 any other pipeline error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, DependencyError, KnowdisError
from .pipeline import STAGES, load_config, run_stage


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knowdis",
        description="Distant data augmentation pipeline for event causality detection")
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="pipeline config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--repeats", type=int, default=1,
                       help="independent repeats to average (evaluate stage)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel workers for corpus annotation")

    synth = sub.add_parser("synth", help="write a synthetic fixture set")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=13)
    synth.add_argument("--corpus-sentences", type=int, default=1200)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            from .synth import write_fixture_set

            paths = write_fixture_set(Path(args.out), seed=args.seed,
                                      corpus_sentences=args.corpus_sentences)
            print(f"fixture set written to {paths.root}")
            return 0

        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.repeats < 1:
            raise ConfigError("--repeats must be >= 1")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        manifest = run_stage(args.command, config, workers=args.workers,
                             repeats=args.repeats)
        print(f"stage {args.command}: output {manifest.output_hash[:16]} "
              f"counts={manifest.counts}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 3
    except KnowdisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
