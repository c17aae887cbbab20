"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeats 5] [--json out.json]

Same numbers as ``chebflat bench``; kept here so the comparison can be run
without the CLI installed on PATH.
"""

import argparse
import json

from chebflat._backend import compiled_kernels
from chebflat.bench import format_rows, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()
    if compiled_kernels is None:
        print("compiled extension not built; only the Python timings are shown")
    rows = run_benchmark(repeats=args.repeats, seed=args.seed)
    print(format_rows(rows))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
