"""Run the five-model comparison on the breast-cancer data over one or more seeds.

    python3 scripts/run_compare.py --out runs/bc --seeds 42 43 44

Exports the dataset from scikit-learn if no CSV is given, prepares it once per
seed, runs ``cffqnn compare`` and prints a per-seed F1/accuracy table plus the
mean over seeds.
"""

import argparse
import os
import sys

import numpy as np

from cffqnn import cli

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from export_breast_cancer import export  # noqa: E402

MODELS = [name for name, _ in cli.COMPARE_MODELS]


def run_seed(csv_path, out, seed, budget):
    prep = os.path.join(out, f"seed{seed}", "prepared")
    flags = ["--label-column", "diagnosis", "--positive-label", "M", "--exclude-columns", "id"]
    if cli.main(["prepare", "--data", csv_path, *flags, "--seed", str(seed), "--out", prep]) != 0:
        raise SystemExit(f"prepare failed for seed {seed}")
    cfg = cli.RunConfig(prepared=prep, seed=seed, budget=budget, out=os.path.join(out, f"seed{seed}", "compare"))
    return {r["name"]: r for r in cli.cmd_compare(cfg)["records"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--data", help="Kaggle-format breast-cancer CSV (exported if omitted)")
    ap.add_argument("--out", default="runs/compare")
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--budget", type=int, default=100)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    csv_path = args.data or export(os.path.join(args.out, "breast_cancer.csv"))

    f1 = {m: [] for m in MODELS}
    acc = {m: [] for m in MODELS}
    print("seed  " + "  ".join(f"{m:>18}" for m in MODELS))
    for seed in args.seeds:
        recs = run_seed(csv_path, args.out, seed, args.budget)
        cells = []
        for m in MODELS:
            f, a = recs[m]["f1"] or 0.0, recs[m]["accuracy"] or 0.0
            f1[m].append(f)
            acc[m].append(a)
            cells.append(f"{f:7.3f} / {a:6.3f}   ")
        print(f"{seed:<5} " + "  ".join(f"{c:>18}" for c in cells))
    print("mean  " + "  ".join(f"{np.mean(f1[m]):7.3f} / {np.mean(acc[m]):6.3f}   " for m in MODELS))
    print("(cells are test F1 / accuracy; undefined F1 counted as 0)")


if __name__ == "__main__":
    main()
