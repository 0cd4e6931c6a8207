#!/usr/bin/env python3
"""Regenerates the bundled synthetic classification datasets.

Each dataset is small, fully deterministic, and built so that specific
transformations genuinely change what a linear test model can express:

  quadrants  - label is the sign agreement of x1 and x2; the product (or
               ratio) of the two features separates it, the raw features
               do not.
  annulus    - label marks points outside a centered disc; squared (or
               magnitude-compressed) coordinates linearize the boundary.
  counts     - the label correlates with how often a value repeats in the
               column, so occurrence counts carry signal the raw value
               does not.
  heavytail  - a positive feature with rare huge outliers; magnitude
               compressions (log, sqrt, tanh, sigmoid) recover a clean
               scale.
  blobs3     - three Gaussian blobs in four dimensions; multi-class path,
               transformations add nothing.
  widepanel  - 24 features, 4 informative; a wide panel for long runs and
               timing comparisons.
"""

import numpy as np

FMT = "%.6f"


def write_csv(name, header, columns, label):
    rows = len(label)
    with open(name, "w") as f:
        f.write(",".join(header + ["label"]) + "\n")
        for i in range(rows):
            cells = [FMT % col[i] for col in columns]
            f.write(",".join(cells + [str(int(label[i]))]) + "\n")
    print(f"{name}: {rows} rows, {len(columns)} features")


def quadrants(rng):
    n = 200
    x1 = rng.uniform(-1, 1, n)
    x2 = rng.uniform(-1, 1, n)
    # keep a margin so the sign structure survives rounding
    x1 = np.where(np.abs(x1) < 0.05, np.sign(x1) * 0.05 + x1, x1)
    x2 = np.where(np.abs(x2) < 0.05, np.sign(x2) * 0.05 + x2, x2)
    n1 = rng.uniform(-1, 1, n)
    n2 = rng.uniform(-1, 1, n)
    label = (x1 * x2 > 0).astype(int)
    write_csv("quadrants.csv", ["x1", "n1", "x2", "n2"], [x1, n1, x2, n2], label)


def annulus(rng):
    n = 200
    x = rng.uniform(-1, 1, n)
    y = rng.uniform(-1, 1, n)
    label = (x * x + y * y > 0.5).astype(int)
    write_csv("annulus.csv", ["x", "y"], [x, y], label)


def counts(rng):
    # class 1 resamples a tiny pool spread across the full range, class 0
    # draws fresh values; the raw value carries no linear signal, its
    # occurrence count does
    n = 200
    label = np.array([i % 2 for i in range(n)])
    pool = np.array([13.25, 37.5, 58.75, 71.0, 92.25])
    v = np.where(label == 1, pool[rng.integers(0, len(pool), n)], rng.uniform(0, 100, n))
    noise = rng.uniform(-1, 1, n)
    write_csv("counts.csv", ["v", "noise"], [v, noise], label)


def heavytail(rng):
    n = 200
    base = rng.uniform(0, 2, n)
    outlier = rng.uniform(0, 1, n) < 0.1
    x = np.where(outlier, rng.uniform(100, 1000, n), base)
    label = (x > 0.8).astype(int)
    noise = rng.uniform(-1, 1, n)
    write_csv("heavytail.csv", ["x", "noise"], [x, noise], label)


def blobs3(rng):
    per = 80
    centers = np.array([[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0]], dtype=float)
    cols = [[] for _ in range(4)]
    label = []
    for c, center in enumerate(centers):
        pts = rng.normal(0, 0.8, (per, 4)) + center
        for j in range(4):
            cols[j].extend(pts[:, j])
        label.extend([c] * per)
    write_csv("blobs3.csv", ["f1", "f2", "f3", "f4"], [np.array(c) for c in cols], np.array(label))


def widepanel(rng):
    n = 240
    informative = rng.uniform(-1, 1, (n, 4))
    score = informative @ np.array([1.5, -1.0, 0.75, 1.25])
    label = (score + rng.normal(0, 0.3, n) > 0).astype(int)
    noise = rng.uniform(-1, 1, (n, 20))
    cols = [informative[:, j] for j in range(4)] + [noise[:, j] for j in range(20)]
    names = [f"a{j}" for j in range(4)] + [f"z{j}" for j in range(20)]
    write_csv("widepanel.csv", names, cols, label)


def main():
    rng = np.random.default_rng(20240817)
    quadrants(rng)
    annulus(rng)
    counts(rng)
    heavytail(rng)
    blobs3(rng)
    widepanel(rng)


if __name__ == "__main__":
    main()
