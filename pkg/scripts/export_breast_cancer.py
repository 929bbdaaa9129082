"""Write the Wisconsin diagnostic breast-cancer data (bundled with scikit-learn) as a CSV.

The layout follows the common Kaggle ``data.csv``: an ``id`` column, a
``diagnosis`` column holding M/B, then the 30 real-valued features.

    python scripts/export_breast_cancer.py data/breast_cancer.csv
"""

import csv
import os
import sys

from sklearn.datasets import load_breast_cancer


def export(path):
    bunch = load_breast_cancer()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "diagnosis"] + [n.replace(" ", "_") for n in bunch.feature_names])
        # sklearn target: 0 = malignant, 1 = benign
        for i, (row, t) in enumerate(zip(bunch.data, bunch.target)):
            w.writerow([i + 1, "B" if t == 1 else "M"] + [repr(float(v)) for v in row])
    return path


if __name__ == "__main__":
    export(sys.argv[1] if len(sys.argv) > 1 else "data/breast_cancer.csv")
