#!/usr/bin/env python3
"""Build the digits-0-vs-1 subset used by the sMNIST task.

Reads the 5000-image MNIST sample bundled in the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, 500 images per digit) and writes IDX
files to the output directory:

  train-images-idx3-ubyte / train-labels-idx1-ubyte   1000 samples
  test-images-idx3-ubyte  / test-labels-idx1-ubyte     200 samples

The held-out set is 100 untouched images per digit. The training set holds
the remaining 400 per digit plus 100 per digit that are one-pixel shifts of
randomly chosen training images.
"""

import argparse
import gzip
import struct
import zipfile
from pathlib import Path

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load(wheel: Path):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read(MEMBER))
    table = np.loadtxt(raw.decode().splitlines(), delimiter=",", dtype=np.int64)
    images = table[:, :784].astype(np.uint8).reshape(-1, 28, 28)
    labels = table[:, 784].astype(np.uint8)
    return images, labels


def shift(image: np.ndarray, dy: int, dx: int) -> np.ndarray:
    out = np.zeros_like(image)
    ys = slice(max(dy, 0), 28 + min(dy, 0))
    yd = slice(max(-dy, 0), 28 + min(-dy, 0))
    xs = slice(max(dx, 0), 28 + min(dx, 0))
    xd = slice(max(-dx, 0), 28 + min(-dx, 0))
    out[ys, xs] = image[yd, xd]
    return out


def write_idx(path: Path, images: np.ndarray, labels: np.ndarray) -> None:
    with open(path.with_name(path.name.replace("#", "images-idx3")), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(path.with_name(path.name.replace("#", "labels-idx1")), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wheel", type=Path, required=True, help="path to mlxtend-*.whl")
    parser.add_argument("--out", type=Path, default=Path("data/mnist01"))
    parser.add_argument("--seed", type=int, default=2021)
    args = parser.parse_args()

    images, labels = load(args.wheel)
    rng = np.random.default_rng(args.seed)
    train_x, train_y, test_x, test_y = [], [], [], []
    offsets = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    for digit in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == digit))
        test, train = idx[:100], idx[100:]
        test_x.extend(images[test])
        test_y.extend([digit] * len(test))
        train_x.extend(images[train])
        train_y.extend([digit] * len(train))
        for k in rng.choice(train, size=100, replace=False):
            dy, dx = offsets[rng.integers(len(offsets))]
            train_x.append(shift(images[k], dy, dx))
            train_y.append(digit)

    order = rng.permutation(len(train_x))
    train_x = np.stack(train_x)[order]
    train_y = np.array(train_y)[order]
    order = rng.permutation(len(test_x))
    test_x = np.stack(test_x)[order]
    test_y = np.array(test_y)[order]

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train-#-ubyte", train_x, train_y)
    write_idx(args.out / "test-#-ubyte", test_x, test_y)
    print(f"wrote {len(train_y)} training and {len(test_y)} held-out images to {args.out}")


if __name__ == "__main__":
    main()
