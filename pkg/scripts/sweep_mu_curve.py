"""Witness against mean photon number for measured and ideal single-photon bases.

Writes CSV files (mu,S1,S2,S) to the output directory, default ./out.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from ctxqkd import contextuality as ctx
from ctxqkd import sources as src


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--dark", type=float, default=0.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.round(np.linspace(0.01, 1.0, 100), 12)
    template = src.SourceModel(kind="coherent", dark_count_prob=args.dark)
    bases = {"measured": ctx.load_sm_table(), "ideal": ctx.born_correlations(ctx.ideal_strategy())}
    for name, base in bases.items():
        path = out / f"sweep_mu_{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mu", "S1", "S2", "S"])
            for p in src.sweep_mu(base, grid, template):
                w.writerow([p.mu, p.S1, p.S2, p.S])
        print(f"{name}: crossing of S2 = 2.1762 at mu = {src.mu_crossing(base, 2.1762, template):.4f} -> {path}")


if __name__ == "__main__":
    main()
