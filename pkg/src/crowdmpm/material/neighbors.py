"""Symmetric near-neighbor pairs via a uniform cell hash.

A pair (i, j) is listed when the comfort zones overlap, i.e.
``|x_i - x_j| < reach_i + reach_j`` with reach = comfort radius r_b.
Results are index pairs with i < j, sorted lexicographically, so the
downstream force assembly is order-deterministic. Positions may come from
either backend; the search itself runs on detached numpy values because
pair membership is a discrete choice.
"""

from __future__ import annotations

import numpy as np

from ..backends import ops_for

# forward half-plane of cell offsets: together with in-cell i<j pairs this
# enumerates every unordered neighbor-cell pair exactly once
_FORWARD_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))


def _as_numpy_positions(x, n):
    ops = ops_for(x)
    return ops.to_numpy(ops.detach(x)).reshape(n, 2)


def brute_force_pairs(x, reach) -> np.ndarray:
    """O(N^2) reference used to validate the hashed search."""
    n = int(x.shape[0])
    xs = _as_numpy_positions(x, n)
    reach = np.broadcast_to(np.asarray(reach, dtype=np.float64), (n,))
    diff = xs[:, None, :] - xs[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    cutoff = reach[:, None] + reach[None, :]
    upper = np.arange(n)[:, None] < np.arange(n)[None, :]
    ii, jj = np.nonzero((dist < cutoff) & upper)
    return np.stack([ii, jj], axis=1).astype(np.int64)


def neighbor_pairs(x, reach) -> np.ndarray:
    """All comfort-zone pairs, found through a uniform spatial hash."""
    n = int(x.shape[0])
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    xs = _as_numpy_positions(x, n)
    reach = np.broadcast_to(np.asarray(reach, dtype=np.float64), (n,))
    cell = 2.0 * float(reach.max())
    if cell <= 0:
        return np.zeros((0, 2), dtype=np.int64)

    keys = np.floor(xs / cell).astype(np.int64)
    buckets: dict[tuple[int, int], list[int]] = {}
    for idx in range(n):
        buckets.setdefault((int(keys[idx, 0]), int(keys[idx, 1])), []).append(idx)

    out = []
    for key in sorted(buckets):
        a = np.asarray(buckets[key], dtype=np.int64)
        if len(a) > 1:
            ii, jj = np.triu_indices(len(a), k=1)
            out.append(np.stack([a[ii], a[jj]], axis=1))
        for off in _FORWARD_OFFSETS:
            nb = buckets.get((key[0] + off[0], key[1] + off[1]))
            if nb is None:
                continue
            b = np.asarray(nb, dtype=np.int64)
            out.append(
                np.stack([np.repeat(a, len(b)), np.tile(b, len(a))], axis=1)
            )
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    cand = np.concatenate(out, axis=0)
    cand = np.where((cand[:, 0] < cand[:, 1])[:, None], cand, cand[:, ::-1])

    diff = xs[cand[:, 0]] - xs[cand[:, 1]]
    dist = np.sqrt((diff**2).sum(-1))
    cand = cand[dist < reach[cand[:, 0]] + reach[cand[:, 1]]]
    order = np.lexsort((cand[:, 1], cand[:, 0]))
    return cand[order]
