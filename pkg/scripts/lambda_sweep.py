#!/usr/bin/env python3
"""Prequantizability of lambda * (normalized area) on the sphere over a range of lambda.

Writes lambda_sweep.csv and a gnuplot script that plots the period against lambda.
"""
import argparse
import csv
import time
from pathlib import Path

import numpy as np

from lieprequant.geometry import Atlas, scaled_area_form
from lieprequant.prequant import default_generators, prequantizable


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.5, 1.0, float(np.sqrt(2)), 2.0, 3.0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    S = Atlas.sphere2()
    gens = default_generators(S, args.n, args.n)
    rows = []
    t0 = time.perf_counter()
    for lam in args.lambdas:
        rep = prequantizable(scaled_area_form(S, lam), [gens])
        period = rep.periods[0]["generator"]
        rows.append({"lambda": lam, "period": period, "error": abs(period - lam), "verdict": rep.verdict, "k": rep.k})
        print(f"lambda={lam:<10.6g} period={period:.10f} verdict={rep.verdict} k={rep.k}")
    print(f"{time.perf_counter() - t0:.2f}s")
    with (args.out / "lambda_sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    (args.out / "lambda_sweep.gp").write_text(
        "set datafile separator ','\nset xlabel 'lambda'\nset ylabel 'period'\n"
        "plot 'lambda_sweep.csv' using 1:2 skip 1 with linespoints title 'period', x title 'lambda'\n"
    )


if __name__ == "__main__":
    main()
