"""Pure-Python reference versions of the greedy-selection kernels."""
import numpy as np


def greedy_disjoint(indptr, indices, order, n_vertices):
    """Select sets in ``order``, keeping each one disjoint from those already kept."""
    claimed = np.zeros(n_vertices, dtype=bool)
    selected = np.zeros(len(indptr) - 1, dtype=bool)
    for b in order:
        members = indices[indptr[b]:indptr[b + 1]]
        if claimed[members].any():
            continue
        selected[b] = True
        claimed[members] = True
    return selected


def greedy_layers(indptr, indices, order, n_vertices):
    """Repeat ``greedy_disjoint`` on the leftovers; return 1-based layer ids."""
    layer = np.zeros(len(indptr) - 1, dtype=np.int64)
    pending = list(order)
    d = 0
    while pending:
        d += 1
        claimed = np.zeros(n_vertices, dtype=bool)
        leftover = []
        for b in pending:
            members = indices[indptr[b]:indptr[b + 1]]
            if claimed[members].any():
                leftover.append(b)
                continue
            layer[b] = d
            claimed[members] = True
        pending = leftover
    return layer
