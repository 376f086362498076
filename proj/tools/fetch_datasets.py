#!/usr/bin/env python3
"""Build the benchmark CSVs used by `cubeforest bench`.

Every output file has the same layout: a header line, one row per record,
numeric feature columns followed by a final `label` column (1 = anomaly).

Sources
  breastw, satellite   extracted from the `imbalanced-databases` wheel on PyPI
                       (UCI Breast Cancer Wisconsin (Original) and Statlog
                       Landsat Satellite, both in their original UCI order).
  shuttle, http,       converted from the ODDS .mat files when a directory
  cover, mulcross      holding them is given with --odds-dir. ODDS hosts them at
                       http://odds.cs.stonybrook.edu/ (shuttle.mat, http.mat,
                       cover.mat, mulcross.mat or mulcross.arff).

Checksums of the generated CSVs are written to data/SHA256SUMS.
"""

import argparse
import glob
import hashlib
import os
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "imbalanced-databases==0.1.1"

# name -> (rows, attributes) as listed in the benchmark registry
EXPECTED = {
    "breastw": (683, 9),
    "satellite": (6435, 36),
    "shuttle": (49097, 9),
    "http": (567497, 3),
    "cover": (286048, 10),
    "mulcross": (262144, 4),
}


def write_csv(path, rows, labels):
    width = len(rows[0])
    with open(path, "w") as out:
        out.write(",".join([f"f{i}" for i in range(width)] + ["label"]) + "\n")
        for row, label in zip(rows, labels):
            out.write(",".join(repr(float(v)) if not float(v).is_integer()
                               else str(int(v)) for v in row))
            out.write(f",{int(label)}\n")


def fetch_wheel(workdir):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                    "-d", workdir, WHEEL], check=True)
    return zipfile.ZipFile(glob.glob(os.path.join(workdir, "*.whl"))[0])


def build_breastw(wheel):
    text = wheel.read("imbalanced_databases/data/wisconsin/wisconsin.dat").decode()
    rows, labels = [], []
    for line in text.splitlines():
        if not line.strip() or line.startswith("@"):
            continue
        fields = [f.strip() for f in line.split(",")]
        rows.append([float(v) for v in fields[:-1]])
        # KEEL marks the malignant minority class as "positive"
        labels.append(fields[-1] == "positive")
    return rows, labels


def build_satellite(wheel):
    rows, labels = [], []
    for part in ("sat.trn.txt", "sat.tst.txt"):
        text = wheel.read(f"imbalanced_databases/data/satimage/{part}").decode()
        for line in text.split("\n"):
            if not line.strip():
                continue
            fields = line.split()
            rows.append([float(v) for v in fields[:-1]])
            # the three smallest classes form the anomaly class
            labels.append(fields[-1] in ("2", "4", "5"))
    return rows, labels


def convert_odds(odds_dir, name):
    import numpy as np
    mat = os.path.join(odds_dir, f"{name}.mat")
    arff = os.path.join(odds_dir, f"{name}.arff")
    if os.path.exists(mat):
        try:
            from scipy.io import loadmat
            data = loadmat(mat)
            x, y = data["X"], data["y"]
        except NotImplementedError:
            import h5py
            with h5py.File(mat, "r") as f:
                x, y = np.array(f["X"]).T, np.array(f["y"]).T
        return x.tolist(), [bool(v) for v in np.ravel(y)]
    if os.path.exists(arff):
        from scipy.io import arff as arff_io
        data, _ = arff_io.loadarff(arff)
        cols = data.dtype.names
        x = [[float(r[c]) for c in cols[:-1]] for r in data]
        y = [r[cols[-1]] in (b"Anomaly", b"1", b"anomaly") for r in data]
        return x, y
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    parser.add_argument("--odds-dir", help="directory with ODDS .mat/.arff files")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    built = {}
    with tempfile.TemporaryDirectory() as tmp:
        wheel = fetch_wheel(tmp)
        built["breastw"] = build_breastw(wheel)
        built["satellite"] = build_satellite(wheel)
    if args.odds_dir:
        for name in ("shuttle", "http", "cover", "mulcross"):
            got = convert_odds(args.odds_dir, name)
            if got is None:
                print(f"skip {name}: not found in {args.odds_dir}")
            else:
                built[name] = got

    sums = []
    for name, (rows, labels) in built.items():
        path = os.path.join(args.out, f"{name}.csv")
        write_csv(path, rows, labels)
        exp_rows, exp_cols = EXPECTED[name]
        note = "" if (len(rows), len(rows[0])) == (exp_rows, exp_cols) else \
            f"  (registry expects {exp_rows}x{exp_cols})"
        print(f"{name}: {len(rows)} rows, {len(rows[0])} attributes, "
              f"{sum(labels)} anomalies{note}")
        with open(path, "rb") as f:
            sums.append(f"{hashlib.sha256(f.read()).hexdigest()}  {name}.csv")
    with open(os.path.join(args.out, "SHA256SUMS"), "w") as f:
        f.write("\n".join(sorted(sums, key=lambda s: s.split()[1])) + "\n")


if __name__ == "__main__":
    main()
