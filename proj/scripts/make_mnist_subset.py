#!/usr/bin/env python3
"""Build the MNIST-subset IDX files used by the desk-scale experiments.

Source: the 10,000 MNIST digits bundled with the npm package `mnist@1.1.0`
(src/digits/<d>.json, pixels stored as floats in [0,1] with 3 decimals).
Output: gzipped IDX files, 8000 train / 2000 test, shuffled with a fixed seed.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist-subset
"""
import gzip
import json
import os
import random
import struct
import sys


def write_idx_images(path, images, rows, cols):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), rows, cols))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, dst = sys.argv[1], sys.argv[2]
    samples = []
    for digit in range(10):
        with open(os.path.join(src, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        for k in range(len(flat) // 784):
            px = flat[k * 784:(k + 1) * 784]
            samples.append(([min(255, max(0, round(v * 255))) for v in px], digit))
    random.Random(20260101).shuffle(samples)
    train, test = samples[:8000], samples[8000:]
    os.makedirs(dst, exist_ok=True)
    write_idx_images(os.path.join(dst, "train-images-idx3-ubyte.gz"), [s[0] for s in train], 28, 28)
    write_idx_labels(os.path.join(dst, "train-labels-idx1-ubyte.gz"), [s[1] for s in train])
    write_idx_images(os.path.join(dst, "t10k-images-idx3-ubyte.gz"), [s[0] for s in test], 28, 28)
    write_idx_labels(os.path.join(dst, "t10k-labels-idx1-ubyte.gz"), [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test to {dst}")


if __name__ == "__main__":
    main()
