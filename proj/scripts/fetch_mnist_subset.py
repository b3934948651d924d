#!/usr/bin/env python3
"""Write a 5000-sample MNIST subset as IDX files.

The subset (500 images per digit) ships inside the mlxtend wheel as
mnist_5k.csv.gz. This script downloads the wheel with pip, extracts that
file and converts it to the standard IDX layout:

    data/mnist_5k/train-images-idx3-ubyte
    data/mnist_5k/train-labels-idx1-ubyte
"""

import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile


def fetch_csv(workdir: pathlib.Path) -> bytes:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-d", str(workdir), "mlxtend==0.24.0"],
        check=True,
    )
    wheel = next(workdir.glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheel) as zf:
        return gzip.decompress(zf.read("mlxtend/data/data/mnist_5k.csv.gz"))


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "mnist_5k"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        text = fetch_csv(pathlib.Path(tmp)).decode("ascii")

    pixels = bytearray()
    labels = bytearray()
    count = 0
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        values = [int(float(x)) for x in line.split(",")]
        if len(values) != 785:
            raise SystemExit(f"unexpected row width {len(values)}")
        pixels.extend(values[:784])
        labels.append(values[784])
        count += 1

    with open(out / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(pixels)
    with open(out / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels)
    print(f"wrote {count} samples to {out}")


if __name__ == "__main__":
    main()
