"""Best-improvement 2-opt on depot-closed tours."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numba import njit

from .routing import Tour
from .tsplib import Instance

IMPROVEMENT_EPS = 1e-10


@njit(cache=True)
def two_opt_inplace(dist, depot, seq, eps=IMPROVEMENT_EPS):
    """Run 2-opt on ``seq`` (a depot-free tour, modified in place).

    The route is depot, seq[0], ..., seq[k-1], depot; edge ``i`` joins route
    positions i and i+1. Returns the number of exchanges applied.
    """
    k = seq.shape[0]
    moves = 0
    if k < 2:
        return moves
    while True:
        best_gain = eps
        best_i = -1
        best_j = -1
        for i in range(k - 1):
            a = depot if i == 0 else seq[i - 1]
            b = seq[i]
            d_ab = dist[a, b]
            for j in range(i + 1, k):
                c = seq[j]
                d = depot if j == k - 1 else seq[j + 1]
                gain = d_ab + dist[c, d] - dist[a, c] - dist[b, d]
                if gain > best_gain:
                    best_gain = gain
                    best_i = i
                    best_j = j
        if best_i < 0:
            return moves
        lo, hi = best_i, best_j
        while lo < hi:
            tmp = seq[lo]
            seq[lo] = seq[hi]
            seq[hi] = tmp
            lo += 1
            hi -= 1
        moves += 1


def two_opt(inst: Instance, tour: Sequence[int]) -> Tour:
    seq = np.array(tour, dtype=np.int64)
    two_opt_inplace(inst.dist, inst.depot, seq)
    return tuple(int(c) for c in seq)
