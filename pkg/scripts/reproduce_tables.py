"""Recompute every published table and print per-cell deviations.

    python scripts/reproduce_tables.py [--out results/] [--n-paths 200]
"""
import argparse
import sys

from gainloss import cli, reference


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--n-paths", default=None)
    args = ap.parse_args()
    extra = ["--n-paths", args.n_paths] if args.n_paths else []
    status = 0
    for key in reference.TABLES:
        print(f"== {key}: {reference.TABLES[key].title}", flush=True)
        code = cli.main(["reproduce", key, "--out", args.out, "--format", "csv", *extra])
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
