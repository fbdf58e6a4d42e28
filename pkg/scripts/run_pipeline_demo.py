#!/usr/bin/env python3
"""Run the full pipeline on the bundled synthetic dataset.

Ingests the daily prices, solves both models under one regime, writes the
five-regime comparison report, and renders the frontier/CAL overlay SVG
into ./demo_output (override with --output-dir).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from portopt.cli import main as portopt_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-dir", default="demo_output")
    parser.add_argument("--constraint", default="c2")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    base = [
        "--prices", str(ROOT / "data" / "synthetic_prices.csv"),
        "--riskfree", str(ROOT / "data" / "synthetic_riskfree.csv"),
        "--market-ticker", "MKT",
        "--output-dir", args.output_dir,
    ]
    steps = [
        ["ingest", *base],
        ["solve", *base, "--constraint", args.constraint,
         "--model", "both", "--objective", "both"],
        ["frontier", *base, "--constraint", args.constraint,
         "--grid", "60", "--cloud-count", "600", "--seed", str(args.seed)],
        ["compare", *base, "--seed", str(args.seed)],
    ]
    for step in steps:
        print(f"\n== portopt {' '.join(step[:1] + ['...'])}")
        code = portopt_main(step)
        if code != 0:
            print(f"step failed with exit code {code}", file=sys.stderr)
            return code
    print(f"\nall outputs in {args.output_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
