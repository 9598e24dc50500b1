#!/usr/bin/env python3
"""Compare the numba and pure-numpy paths of the hot kernels.

Run: python benchmarks/bench_kernels.py
Set VEGSHELF_NUMBA=0 to confirm the fallback selection at import time.
"""

import time

import numpy as np

from vegshelf import kernels


def bench(label, fn, *args, repeat=5):
    fn(*args)  # warm-up (jit compilation for the numba path)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    print(f"{label:45s} {min(times) * 1e3:8.2f} ms")


def main():
    rng = np.random.default_rng(0)
    print(f"numba enabled: {kernels.numba_enabled()}")

    img = rng.integers(0, 256, (1024, 1024, 3), dtype=np.uint8)
    idx = rng.choice(1024 * 1024, 100_000, replace=False).astype(np.int64)
    values = rng.integers(0, 2, 100_000).astype(np.uint8) * 255
    bench("saltpepper_write (active path)", lambda: kernels.saltpepper_write(img.copy(), idx, values))
    bench("saltpepper_write (numpy reference)", lambda: kernels.saltpepper_write_numpy(img.copy(), idx, values))

    image = rng.random((224, 224, 3)).astype(np.float32)
    segments = rng.integers(0, 50, (224, 224)).astype(np.int64)
    masks = rng.integers(0, 2, (200, 50)).astype(bool)
    fill = image.mean(axis=(0, 1)).astype(np.float32)
    bench("composite_masked (active path)", lambda: kernels.composite_masked(image, segments, masks, fill))
    bench("composite_masked (numpy reference)", lambda: kernels.composite_masked_numpy(image, segments, masks, fill))

    a = kernels.composite_masked(image, segments, masks, fill)
    b = kernels.composite_masked_numpy(image, segments, masks, fill)
    assert (a == b).all(), "paths disagree"
    print("paths produce identical output")


if __name__ == "__main__":
    main()
