"""Write the conditional price series of both models along eps_c and Y as CSV.

    python scripts/figure_series.py [--out results/]
"""
import argparse
import csv
import sys
from pathlib import Path

from gainloss import cli
from gainloss.config import build_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = build_config({})
    ok = True
    for target in ("figure1", "figure2"):
        rows = cli.figure_series(target, cfg)
        with open(out / f"{target}.csv", "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        for name, passed in cli.figure_checks(target, rows):
            print(f"{'PASS' if passed else 'FAIL'} {target} {name}")
            ok &= passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
