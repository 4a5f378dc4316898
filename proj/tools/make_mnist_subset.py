#!/usr/bin/env python3
"""Write an MNIST subset as IDX files.

Input is a CSV (optionally gzip-compressed) with 784 pixel columns followed
by the label, e.g. mnist_5k.csv.gz shipped inside the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, drawn from the original MNIST set).

    python3 tools/make_mnist_subset.py mnist_5k.csv.gz data/ --count 1000
"""

import argparse
import gzip
import pathlib
import struct


def read_rows(path, count):
    # The source is sorted by label, so take the first count/10 images of
    # each digit and interleave them 0, 1, ..., 9, 0, 1, ...
    per_class = count // 10
    opener = gzip.open if str(path).endswith(".gz") else open
    by_label = {d: [] for d in range(10)}
    with opener(path, "rt", encoding="ascii") as f:
        for line in f:
            fields = line.strip().split(",")
            if len(fields) != 785:
                raise ValueError(f"expected 785 fields, got {len(fields)}")
            label = int(float(fields[784]))
            if len(by_label[label]) < per_class:
                by_label[label].append(bytes(int(float(v)) for v in fields[:784]))
    if any(len(v) < per_class for v in by_label.values()):
        raise ValueError("not enough images per digit")
    return [(by_label[d][i], d) for i in range(per_class) for d in range(10)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("outdir")
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--prefix", default="mnist-1k")
    args = ap.parse_args()

    rows = read_rows(args.csv, args.count)
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{args.prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(rows), 28, 28))
        for pixels, _ in rows:
            f.write(pixels)
    with open(out / f"{args.prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, len(rows)))
        f.write(bytes(label for _, label in rows))


if __name__ == "__main__":
    main()
