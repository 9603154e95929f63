"""Throughput over repeated bench runs; prints the median and spread.

    python3 scripts/bench.py --repeats 5
"""

import argparse
import statistics

from leftluggage.cli import run_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=300)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    runs = [run_bench(args.frames) for _ in range(args.repeats)]
    for i, fps in enumerate(runs):
        print(f"run {i}: {fps:.1f} fps")
    print(f"median {statistics.median(runs):.1f} fps, min {min(runs):.1f}, max {max(runs):.1f}")


if __name__ == "__main__":
    main()
