"""Convert the 5,000-image MNIST subset bundled with the mlxtend wheel into IDX files.

Usage::

    pip download --no-deps mlxtend==0.24.0 -d /tmp/mlx
    python tools/mnist_subset_to_idx.py /tmp/mlx/mlxtend-0.24.0-py3-none-any.whl data/

The wheel stores ``mlxtend/data/data/mnist_5k.csv.gz``: one row per image,
784 pixel values followed by the digit label.  The output is
``mnist5k-images-idx3-ubyte.gz`` and ``mnist5k-labels-idx1-ubyte.gz``.
"""

from __future__ import annotations

import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from qcnn_forge.data import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheel", type=Path)
    parser.add_argument("out_dir", type=Path)
    args = parser.parse_args()
    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    images = table[:, :784].reshape(-1, 28, 28).astype(np.uint8)
    labels = table[:, 784].astype(np.uint8)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(
        images,
        labels,
        args.out_dir / "mnist5k-images-idx3-ubyte.gz",
        args.out_dir / "mnist5k-labels-idx1-ubyte.gz",
    )
    counts = np.bincount(labels, minlength=10)
    print(f"wrote {len(labels)} images; per digit: {counts.tolist()}")


if __name__ == "__main__":
    main()
