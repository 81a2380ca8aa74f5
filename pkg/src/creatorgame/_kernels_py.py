"""Pure numpy implementations of the per-user ranking kernels.

Every function takes a score matrix of shape ``(m, n)`` (one row per user,
one column per creator) and works row-wise. Ranking is a stable descending
sort, so tied creators keep index order. The compiled module
``creatorgame._kernels`` exposes the same functions with the same results.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "brm_rewards",
    "brm_potential",
    "topk_softmax_rewards",
    "ranked_weighted_sum",
]


def _descending(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-scores, axis=1, kind="stable")
    return order, np.take_along_axis(scores, order, axis=1)


def _antiderivative(x: np.ndarray, grid: np.ndarray, values: np.ndarray,
                    cum: np.ndarray) -> np.ndarray:
    # x[:, k] is evaluated against density row k
    p = values.shape[1]
    j = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, p - 1)
    k = np.broadcast_to(np.arange(x.shape[1]), x.shape)
    return cum[k, j] + values[k, j] * (x - grid[j])


def _cumulative(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    widths = np.diff(grid)
    cum = np.zeros_like(values)
    if values.shape[1] > 1:
        cum[:, 1:] = np.cumsum(values[:, :-1] * widths[:-1], axis=1)
    return cum


def brm_rewards(scores, grid, values):
    """Backward rewards for piecewise-constant densities.

    ``grid`` holds ``p + 1`` breakpoints on [0, 1] and ``values[k, j]`` is the
    density of rank ``k`` on ``[grid[j], grid[j + 1])``.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    m, n = scores.shape
    order, s = _descending(scores)
    below = np.zeros_like(s)
    below[:, :-1] = s[:, 1:]
    cum = _cumulative(grid, values)
    upper = _antiderivative(s, grid, values, cum)
    lower = _antiderivative(below, grid, values, cum)
    terms = np.where(s == below, 0.0, upper - lower)
    by_rank = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]
    out = np.empty_like(scores)
    np.put_along_axis(out, order, by_rank, axis=1)
    return out


def brm_potential(scores, grid, values):
    """Per-user sum of rank-k antiderivatives at the k-th highest score."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    _, s = _descending(scores)
    cum = _cumulative(grid, values)
    acc = np.zeros(s.shape[0])
    vals = _antiderivative(s, grid, values, cum)
    for k in range(s.shape[1]):
        acc += vals[:, k]
    return acc


def topk_softmax_rewards(scores, K, beta, engagement):
    """Softmax over the top ``K`` positions; tied creators share the mean.

    With ``engagement`` the position rewards are scaled by
    ``beta * log(sum_{k<=K} exp(s_k / beta))``.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    m, n = scores.shape
    order, s = _descending(scores)
    top = s[:, :K]
    shift = top[:, :1]
    w = np.exp((top - shift) / beta)
    z = np.zeros(m)
    for k in range(K):
        z += w[:, k]
    pos = np.zeros_like(s)
    pos[:, :K] = w / z[:, None]
    if engagement:
        pos[:, :K] *= (shift[:, 0] + beta * np.log(z))[:, None]
    # tie groups: maximal runs of bitwise-equal sorted scores
    new_group = np.ones_like(s, dtype=bool)
    new_group[:, 1:] = s[:, 1:] != s[:, :-1]
    gid = np.cumsum(new_group, axis=1) - 1 + (np.arange(m) * n)[:, None]
    flat = gid.ravel()
    sums = np.bincount(flat, weights=pos.ravel(), minlength=m * n)
    counts = np.bincount(flat, minlength=m * n)
    shared = (sums[flat] / counts[flat]).reshape(m, n)
    out = np.empty_like(scores)
    np.put_along_axis(out, order, shared, axis=1)
    return out


def ranked_weighted_sum(scores, r):
    """Per-user ``sum_k r[k] * s_(k)`` with scores sorted descending."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    _, s = _descending(scores)
    acc = np.zeros(s.shape[0])
    for k in range(s.shape[1]):
        acc += r[k] * s[:, k]
    return acc
