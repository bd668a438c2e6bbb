#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Run after building the extension:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from bevfuse.kernels import fallback

try:
    from bevfuse.kernels import _core as compiled
except ImportError:
    compiled = None


def bench(fn, *args, repeat=30):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    rng = np.random.default_rng(0)
    dtype = np.float32

    x = rng.normal(size=(36, 84, 84)).astype(dtype)
    cols = fallback.im2col(x, 3, 3, 1)
    vals = rng.normal(size=(4000, 32)).astype(dtype)
    idx = rng.integers(0, 400, size=4000)
    feat = rng.normal(size=(48, 80, 80)).astype(dtype)
    xs = rng.uniform(0, 79, size=2000).astype(dtype)
    ys = rng.uniform(0, 79, size=2000).astype(dtype)
    gout = rng.normal(size=(2000, 48)).astype(dtype)
    pts = rng.uniform(-20, 20, size=(120, 2))
    centers = rng.uniform(-20, 20, size=(400, 2))

    cases = [
        ("im2col 36x84x84 k3 s1", lambda m: m.im2col(x, 3, 3, 1)),
        ("col2im 36x84x84 k3 s1", lambda m: m.col2im(cols, 36, 84, 84, 3, 3, 1)),
        ("scatter_add 4000x32 -> 400", lambda m: m.scatter_add_rows(vals, idx, 400)),
        ("bilinear_sample 2000 pts, 48ch", lambda m: m.bilinear_sample(feat, xs, ys)),
        ("bilinear_grad 2000 pts, 48ch", lambda m: m.bilinear_sample_grad(gout, xs, ys, 80, 80)),
        ("knn 120 pts x 400 cells k1", lambda m: m.nearest_points(pts, centers, 1, 20.0)),
    ]

    print(f"{'kernel':36s} {'fallback':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name, fn in cases:
        t_py = bench(fn, fallback)
        if compiled is None:
            print(f"{name:36s} {t_py * 1e3:10.3f} ms {'n/a':>12s}")
            continue
        t_cy = bench(fn, compiled)
        np.testing.assert_array_equal(fn(fallback), fn(compiled))
        print(
            f"{name:36s} {t_py * 1e3:10.3f} ms {t_cy * 1e3:10.3f} ms {t_py / t_cy:8.1f}x"
        )
    if compiled is None:
        print("\ncompiled core not built; showing fallback only")


if __name__ == "__main__":
    main()
