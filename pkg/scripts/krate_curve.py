"""Write k(eps, t) and hBound(eps) curves for the bundled count table as CSV.

    python3 scripts/krate_curve.py --out krate.csv
"""
import argparse
import csv
import sys

from hardyamp.cli import KRATE_COLUMNS, eps_grid, krate_rows
from hardyamp.data import table1_counts
from hardyamp.protocol import delta_exp_from_counts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", default="5,10,100")
    ap.add_argument("--eps-grid", default="0:0.205:0.005")
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    table = table1_counts()
    ts = [float(v) for v in args.t.split(",")]
    rows = krate_rows(lambda e: delta_exp_from_counts(table, e), table.n, ts, eps_grid(args.eps_grid))
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, KRATE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()
        print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
