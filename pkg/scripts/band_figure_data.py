#!/usr/bin/env python3
"""Emit band-structure and localized-mode CSVs at two coupling strengths.

For each requested epsilon: the first four band functions omega_l(k) and
the band-1 Wannier profile next to its compact asymptotic approximation.
The CSVs are the plotting contract; nothing is rendered in-process.
"""

import argparse
import os
import sys

from tbgp.cli import RunConfig, run_subcommand


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 0.25])
    args = ap.parse_args()
    for eps in args.eps:
        out = os.path.join(args.out, f"eps{eps:g}")
        cfg = RunConfig(eps=eps)
        for sub in ("bands", "wannier"):
            code = run_subcommand(sub, cfg, out)
            if code:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
