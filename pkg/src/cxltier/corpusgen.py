"""Materialize synthetic corpus dumps for bench-compress.

Usage: python -m cxltier.corpusgen OUTDIR [--pages N] [--seed S] [--profiles a,b]
"""

from __future__ import annotations

import argparse
import sys

from .workload import ContentProfile, write_profile_corpus


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cxltier.corpusgen", description=__doc__)
    parser.add_argument("outdir")
    parser.add_argument("--pages", type=int, default=256, help="pages per dump file")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument(
        "--profiles",
        default=",".join(p.value for p in ContentProfile),
        help="comma-separated profile names",
    )
    args = parser.parse_args(argv)
    profiles = [ContentProfile(tok) for tok in args.profiles.split(",") if tok]
    for path in write_profile_corpus(args.outdir, args.pages, args.seed, profiles):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
