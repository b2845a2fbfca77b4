"""Rebuild the bundled count fixture from the published experimental table.

The published counts have two decimals in units of 1e6, so they cannot be
summed to an exact run count.  The fixture is instead built as:

* the four certification events: round(f * n) with the 12-digit frequencies;
* the other twelve: the 6-digit table probabilities, rescaled so that the
  whole table sums to n exactly, then rounded by largest remainder.

Residuals against both published columns are printed.  Run with --write to
overwrite src/hardyamp/fixtures/table1_counts.csv.
"""
import argparse
from pathlib import Path

import numpy as np

from hardyamp.data import CHSH, CountTable, PAPER_FREQS, PAPER_N

# (a, b, x, y): (counts in 1e6, probability)
PUBLISHED = {
    (0, 0, 0, 0): (173.54, 0.022668), (0, 1, 0, 0): (284.78, 0.037198),
    (1, 0, 0, 0): (301.86, 0.039430), (1, 1, 0, 0): (1143.84, 0.149410),
    (0, 0, 0, 1): (459.53, 0.060024), (0, 1, 0, 1): (2.94, 0.000384),
    (1, 0, 0, 1): (257.02, 0.033572), (1, 1, 0, 1): (1190.90, 0.155556),
    (0, 0, 1, 0): (479.39, 0.062619), (0, 1, 1, 0): (270.59, 0.035345),
    (1, 0, 1, 0): (2.78, 0.000363), (1, 1, 1, 0): (1162.20, 0.151788),
    (0, 0, 1, 1): (1.56, 0.000204), (0, 1, 1, 1): (715.59, 0.093471),
    (1, 0, 1, 1): (754.50, 0.098554), (1, 1, 1, 1): (454.88, 0.059417),
}
OUT = Path(__file__).resolve().parents[1] / "src" / "hardyamp" / "fixtures" / "table1_counts.csv"


def reconcile() -> CountTable:
    fixed = {e: round(f * PAPER_N) for e, f in PAPER_FREQS.items()}
    rest = [e for e in PUBLISHED if e not in fixed]
    budget = PAPER_N - sum(fixed.values())
    w = np.array([PUBLISHED[e][1] for e in rest])
    exact = w / w.sum() * budget
    base = np.floor(exact).astype(np.int64)
    short = budget - int(base.sum())
    order = np.argsort(-(exact - base), kind="stable")
    base[order[:short]] += 1
    counts = np.zeros(CHSH.shape, dtype=np.int64)
    for e, k in list(fixed.items()) + list(zip(rest, base)):
        a, b, x, y = e
        counts[x, y, a, b] = k
    return CountTable(CHSH, counts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--write", action="store_true", help="overwrite the bundled fixture")
    args = ap.parse_args()
    table = reconcile()
    print(f"total runs: {table.n} (target {PAPER_N})")
    print(f"published counts sum to {sum(v[0] for v in PUBLISHED.values()):.2f}e6")
    print("event      count         vs 1e6 column   freq - table prob")
    f = table.frequencies()
    for (a, b, x, y), (c6, prob) in PUBLISHED.items():
        k = table.counts[x, y, a, b]
        print(f"({a}{b},{x}{y})  {k:12d}  {k / 1e6 - c6:+10.4f}e6   {f[x, y, a, b] - prob:+.2e}")
    print("per-setting totals (1e9):", np.round(table.totals().ravel() / 1e9, 4).tolist())
    if args.write:
        OUT.write_text(table.to_csv())
        print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
