#!/usr/bin/env python3
"""Doubling study of every smooth integral fixture; writes convergence.csv."""
import argparse
import csv
from pathlib import Path

from lieprequant.convergence import run_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("convergence.csv"))
    ap.add_argument("--ns", type=int, nargs="+", default=[50, 100, 200, 400])
    args = ap.parse_args()
    studies = run_study(tuple(args.ns))
    rows = [r for s in studies for r in s.rows()]
    with args.out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    for s in studies:
        ratios = " ".join(f"{r:.3f}" for r in s.ratios)
        print(f"{s.name:18s} {'PASS' if s.passes() else 'FAIL'}  final {s.values[-1]:.12f}  ratios {ratios}")
    return 0 if all(s.passes() for s in studies) else 1


if __name__ == "__main__":
    raise SystemExit(main())
