#!/usr/bin/env python3
"""One-time export of the three benchmark datasets to CSV.

Writes data/breast_cancer.csv, data/wine.csv, and data/diabetes.csv from the
copies bundled with scikit-learn, so the engine never needs network access.
Feature names are lowercased with spaces replaced by underscores; the target
column is named `target`.
"""

import csv
import pathlib

from sklearn.datasets import load_breast_cancer, load_diabetes, load_wine

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"


def export(bunch, path: pathlib.Path, integer_target: bool) -> None:
    names = [n.lower().replace(" ", "_") for n in bunch.feature_names]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["target"])
        for row, target in zip(bunch.data, bunch.target):
            cells = [repr(float(v)) for v in row]
            cells.append(str(int(target)) if integer_target else repr(float(target)))
            writer.writerow(cells)
    print(f"wrote {path} ({len(bunch.data)} rows, {len(names)} features)")


def main() -> None:
    OUT_DIR.mkdir(exist_ok=True)
    export(load_breast_cancer(), OUT_DIR / "breast_cancer.csv", integer_target=True)
    export(load_wine(), OUT_DIR / "wine.csv", integer_target=True)
    export(load_diabetes(), OUT_DIR / "diabetes.csv", integer_target=False)


if __name__ == "__main__":
    main()
