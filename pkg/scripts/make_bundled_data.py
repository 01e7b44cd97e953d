"""Regenerate the derived data files shipped in ctxqkd/data.

    python scripts/make_bundled_data.py
"""

import csv
from pathlib import Path

from ctxqkd import contextuality as ctx

DATA = Path(__file__).resolve().parents[1] / "src" / "ctxqkd" / "data"


def main():
    with open(DATA / "ideal_contexts.csv", "w", newline="") as fh:
        fh.write("# Ideal KCBS strategy rendered in the per-context detector schema.\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ctx.CONTEXT_HEADER)
        w.writerows(ctx.strategy_context_rows(ctx.ideal_strategy()))

    with open(DATA / "uniform_table.csv", "w", newline="") as fh:
        fh.write("# Completely noisy correlations: p(0|x,y) = 1/2 everywhere.\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ctx.DIRECT_HEADER)
        for x in ctx.PREPARATIONS:
            for y in ctx.MEASUREMENTS:
                w.writerow([x, y, 0.5])


if __name__ == "__main__":
    main()
