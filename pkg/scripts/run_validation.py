#!/usr/bin/env python3
"""Run the default error-scaling sweep and print the per-epsilon summary.

Writes the same CSVs as `tbgp validate` and prints the fitted exponent of
sup_error against the small parameter mu.
"""

import argparse
import sys

from tbgp.cli import RunConfig, run_subcommand


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/validation")
    ap.add_argument("--eps-list", default="0.6, 0.55, 0.5, 0.45")
    ap.add_argument("--sample-count", type=int, default=64)
    ap.add_argument("--t0", type=float, default=1.0)
    args = ap.parse_args()
    cfg = RunConfig(eps_list=args.eps_list, sample_count=args.sample_count, T0=args.t0)
    return run_subcommand("validate", cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
