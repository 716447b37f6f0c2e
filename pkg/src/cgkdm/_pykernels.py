"""Numpy fallback for the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def pair_excess_sum(ranks, excess, block=256):
    """Sum over ``i < j`` of ``prod_k (1 + excess[|r_ik - r_jk|]) - 1``."""
    ranks = np.ascontiguousarray(ranks, dtype=np.int32)
    excess = np.ascontiguousarray(excess, dtype=float)
    n, d = ranks.shape
    if excess.shape[0] < n:
        raise ValueError("lag table shorter than the sample")
    total = 0.0
    for start in range(0, n - 1, block):
        stop = min(start + block, n - 1)
        p = excess[np.abs(ranks[start:stop, 0, None] - ranks[None, :, 0])]
        for k in range(1, d):
            e = excess[np.abs(ranks[start:stop, k, None] - ranks[None, :, k])]
            p = p + e + p * e
        # keep only j > i
        mask = np.arange(n)[None, :] > np.arange(start, stop)[:, None]
        total += float(p[mask].sum())
    return total
