#!/usr/bin/env python3
"""Regenerate data/synthetic.csv, the small smooth-signal regression set
bundled for CI and demo runs."""

import csv
from pathlib import Path

import numpy as np


def main() -> None:
    rng = np.random.default_rng(20240514)
    n, d = 240, 5
    x = rng.uniform(0, 1, (n, d))
    y = (
        10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 5.0 * x[:, 3]
        + rng.normal(0, 1.0, n)
    )
    out = Path(__file__).resolve().parent.parent / "data" / "synthetic.csv"
    out.parent.mkdir(exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i+1}" for i in range(d)] + ["y"])
        for row, yi in zip(x, y):
            w.writerow([f"{v:.10g}" for v in row] + [f"{yi:.10g}"])
    print(f"wrote {out} ({n} rows)")


if __name__ == "__main__":
    main()
