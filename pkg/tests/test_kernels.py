import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nervecraft import _kernels_py, kernels

cy = pytest.importorskip("nervecraft._kernels")


@st.composite
def csr_sets(draw):
    nv = draw(st.integers(1, 30))
    sets = draw(st.lists(st.lists(st.integers(0, nv - 1), max_size=8, unique=True), max_size=25))
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(s) for s in sets])
    indices = np.array([v for s in sets for v in sorted(s)], dtype=np.int64)
    order = np.array(draw(st.permutations(range(len(sets)))), dtype=np.int64)
    return indptr, indices, order, nv


@settings(max_examples=200, deadline=None)
@given(csr_sets())
def test_backends_agree(data):
    ip, ix, order, nv = data
    a = _kernels_py.greedy_disjoint(ip, ix, order, nv)
    assert np.array_equal(a, cy.greedy_disjoint(ip, ix, order, nv))
    la = _kernels_py.greedy_layers(ip, ix, order, nv)
    assert np.array_equal(la, cy.greedy_layers(ip, ix, order, nv))
    # kept sets are pairwise disjoint; every empty set joins layer 1
    kept = np.concatenate([ix[ip[b]:ip[b + 1]] for b in np.flatnonzero(a)] or [np.empty(0, int)])
    assert len(kept) == len(set(kept.tolist()))
    assert np.array_equal(la == 1, a)
    assert (la >= 1).all()


def test_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_layers_small_example():
    # sets {0,1}, {1,2}, {2,3}: first and third share nothing
    ip = np.array([0, 2, 4, 6])
    ix = np.array([0, 1, 1, 2, 2, 3])
    assert kernels.greedy_layers(ip, ix, np.arange(3), 4).tolist() == [1, 2, 1]
