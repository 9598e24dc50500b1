"""Hot per-pixel kernels with numba acceleration.

Every kernel has a pure-numpy twin producing bit-identical output; the
``VEGSHELF_NUMBA`` environment variable (``0``/``false`` to disable) selects
the path at import time. ``benchmarks/bench_kernels.py`` compares both.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("VEGSHELF_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _FLAG not in ("0", "false", "no", "off")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def numba_enabled() -> bool:
    return NUMBA_ENABLED


# ---------------------------------------------------------------------------
# salt & pepper writes: set chosen spatial pixels to an extreme value on all
# channels. Index selection happens outside (numpy RNG) so both paths and any
# worker count stay deterministic.


def _saltpepper_write_np(img: np.ndarray, flat_idx: np.ndarray, values: np.ndarray) -> None:
    h, w, c = img.shape
    flat = img.reshape(h * w, c)
    flat[flat_idx, :] = values[:, None]


def _saltpepper_write_jit(img, flat_idx, values):  # pragma: no cover - jit body
    h, w, c = img.shape
    flat = img.reshape(h * w, c)
    for i in range(flat_idx.shape[0]):
        p = flat_idx[i]
        v = values[i]
        for ch in range(c):
            flat[p, ch] = v


# ---------------------------------------------------------------------------
# LIME perturbation compositing: for each on/off mask row build an image where
# masked-off superpixels are replaced by a fill colour.


def _composite_masked_np(
    image: np.ndarray, segments: np.ndarray, masks: np.ndarray, fill: np.ndarray
) -> np.ndarray:
    n = masks.shape[0]
    out = np.empty((n,) + image.shape, dtype=image.dtype)
    for i in range(n):
        keep = masks[i][segments]  # HxW bool
        out[i] = np.where(keep[..., None], image, fill)
    return out


def _composite_masked_jit(image, segments, masks, fill):  # pragma: no cover - jit body
    n = masks.shape[0]
    h, w, c = image.shape
    out = np.empty((n, h, w, c), dtype=image.dtype)
    for i in range(n):
        for y in range(h):
            for x in range(w):
                if masks[i, segments[y, x]]:
                    for ch in range(c):
                        out[i, y, x, ch] = image[y, x, ch]
                else:
                    for ch in range(c):
                        out[i, y, x, ch] = fill[ch]
    return out


if NUMBA_ENABLED:
    saltpepper_write = njit(cache=True)(_saltpepper_write_jit)
    composite_masked = njit(cache=True)(_composite_masked_jit)
else:
    saltpepper_write = _saltpepper_write_np
    composite_masked = _composite_masked_np

# numpy twins kept importable for the benchmark and equivalence tests
saltpepper_write_numpy = _saltpepper_write_np
composite_masked_numpy = _composite_masked_np
