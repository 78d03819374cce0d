#!/usr/bin/env python3
"""Write the 5,000-example MNIST subset bundled with mlxtend as IDX files.

The full MNIST archives need network access; mlxtend ships 500 examples per
digit from the original training set as a gzipped CSV, which is enough for
the desk-scale experiments. Usage:

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist5k
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("wheel", help="path to an mlxtend wheel")
    parser.add_argument("out_dir")
    args = parser.parse_args()

    raw = gzip.decompress(zipfile.ZipFile(args.wheel).read(CSV_MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    images = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    count = images.shape[0]

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(images.tobytes())
    with open(out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels.tobytes())
    print(f"wrote {count} examples to {out}")


if __name__ == "__main__":
    main()
