"""Pure-Python/numpy kernels; fallback when the compiled extension is absent."""

from __future__ import annotations

import numpy as np


def pava_decreasing(z):
    """Project z onto the nonincreasing cone (pool-adjacent-violators)."""
    z = np.asarray(z, dtype=float)
    n = z.size
    if n == 0:
        return z.copy()
    means = np.empty(n)
    counts = np.empty(n, dtype=np.intp)
    top = -1
    for v in z:
        top += 1
        means[top] = v
        counts[top] = 1
        while top > 0 and means[top] >= means[top - 1]:
            c = counts[top - 1] + counts[top]
            means[top - 1] = (means[top - 1] * counts[top - 1] + means[top] * counts[top]) / c
            counts[top - 1] = c
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        out[pos : pos + counts[b]] = means[b]
        pos += counts[b]
    return out


def pava_decreasing_batch(Z):
    """Row-wise nonincreasing projection of an (N, p) array.

    Small widths use the vectorized min-max formula
    x_i = min_{j<=i} max_{k>=i} mean(z[j..k]); wide rows fall back to the
    sequential algorithm to avoid the O(p^2) intermediate.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("expected an (N, p) array")
    N, p = Z.shape
    if p == 0 or N == 0:
        return Z.copy()
    if p > 16:
        out = np.empty_like(Z)
        for n in range(N):
            out[n] = pava_decreasing(Z[n])
        return out
    S = np.concatenate([np.zeros((N, 1)), np.cumsum(Z, axis=1)], axis=1)
    j = np.arange(p)
    k = np.arange(p)
    length = k[None, :] - j[:, None] + 1  # p×p, valid where k >= j
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (S[:, None, 1 + k] - S[:, j, None]) / length[None, :, :]
    A = np.where(length[None, :, :] >= 1, A, -np.inf)
    M = np.flip(np.maximum.accumulate(np.flip(A, axis=2), axis=2), axis=2)
    mask_ji = j[:, None] <= k[None, :]  # j <= i
    M = np.where(mask_ji[None, :, :], M, np.inf)
    return M.min(axis=1)
