#!/usr/bin/env python3
"""Convert the Intel Berkeley Research Lab log (data.txt) to a sensor CSV.

Input lines are whitespace separated:
    date time epoch moteid temperature humidity light voltage
Output has one row per epoch and one column per mote (1..n), holding the
temperature. Only epochs where every mote reported a plausible reading are kept.
"""

import argparse
import csv
import sys
from collections import defaultdict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="data.txt from the Intel Lab dataset")
    ap.add_argument("output", help="CSV to write")
    ap.add_argument("--sensors", type=int, default=54)
    ap.add_argument("--min-temp", type=float, default=-10.0)
    ap.add_argument("--max-temp", type=float, default=60.0)
    ap.add_argument("--max-rows", type=int, default=0, help="0 keeps every complete epoch")
    args = ap.parse_args()

    readings = defaultdict(dict)
    with open(args.input) as f:
        for line in f:
            parts = line.split()
            if len(parts) < 5:
                continue
            try:
                epoch, mote, temp = int(parts[2]), int(parts[3]), float(parts[4])
            except ValueError:
                continue
            if 1 <= mote <= args.sensors and args.min_temp <= temp <= args.max_temp:
                readings[epoch][mote] = temp

    rows = [
        [readings[e][m] for m in range(1, args.sensors + 1)]
        for e in sorted(readings)
        if len(readings[e]) == args.sensors
    ]
    if args.max_rows:
        rows = rows[: args.max_rows]
    if not rows:
        print("no epoch has a reading from every sensor", file=sys.stderr)
        return 1

    with open(args.output, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"s{m}" for m in range(1, args.sensors + 1)])
        w.writerows(rows)
    print(f"{len(rows)} snapshots written", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
