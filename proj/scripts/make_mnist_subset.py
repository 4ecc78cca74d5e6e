#!/usr/bin/env python3
"""Build a gzipped IDX MNIST subset from the digits bundled in the npm `mnist` package.

The package (MIT licensed, https://www.npmjs.com/package/mnist) ships 10,000 MNIST
digits as JSON arrays of intensities divided by 255 and rounded to three decimals.
The spacing of k/255 is wider than the rounding, so round(v * 255) recovers the
original byte exactly.

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist-subset
"""
import argparse
import gzip
import json
import pathlib
import random
import struct


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + payload)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--n-test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20211)
    args = ap.parse_args()

    records = []
    for digit in range(10):
        values = json.loads(pathlib.Path(args.digits_dir, f"{digit}.json").read_text())["data"]
        assert len(values) % 784 == 0
        for i in range(0, len(values), 784):
            pixels = bytes(round(v * 255) for v in values[i:i + 784])
            records.append((pixels, digit))

    random.Random(args.seed).shuffle(records)
    splits = {"test": records[:args.n_test], "train": records[args.n_test:]}
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, recs in splits.items():
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, (len(recs), 28, 28),
                  b"".join(p for p, _ in recs))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, (len(recs),),
                  bytes(d for _, d in recs))
        print(name, len(recs))


if __name__ == "__main__":
    main()
