import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nervecraft.cubical import (
    boundary_matrix, chain_star_masses, face_boundary, smallcase_cubical_oracle,
    smith_normal_form,
)
from nervecraft.errors import InputError
from nervecraft.nerve import nerve_from_keys


def triangle_nerve():
    """Three pairwise-overlapping balls with no triple point: an annulus, H_1 = Z."""
    keys = [((a,), (b,)) for a in range(3) for b in range(3) if a != b]
    return nerve_from_keys([0.01] * 3, keys)


def loop(c=1):
    e = lambda a, b: ((a,), (b,))
    return {e(0, 1): c, e(1, 0): -c, e(1, 2): c, e(2, 1): -c, e(2, 0): c, e(0, 2): -c}


def test_boundary_squares_to_zero():
    key = ((0,), (1, 2, 3))
    total = {}
    for f, c in face_boundary(key).items():
        for g, d in face_boundary(f).items():
            total[g] = total.get(g, 0) + c * d
    assert all(v == 0 for v in total.values())


def test_annulus_generator_does_not_bound():
    N = triangle_nerve()
    assert len(N) == 12
    v = smallcase_cubical_oracle(N, loop(), 1)
    assert v.is_cycle and not v.bounds and v.nontrivial and v.betti == 1


def test_zero_chain_bounds():
    v = smallcase_cubical_oracle(triangle_nerve(), {}, 1)
    assert v.is_cycle and v.bounds


def test_boundary_of_square_bounds():
    N = nerve_from_keys([0.01, 0.005, 0.0025], [((0,), (1, 2))])
    assert len(N) == 9
    v = smallcase_cubical_oracle(N, face_boundary(((0,), (1, 2))), 1)
    assert v.is_cycle and v.bounds and v.betti == 0


def test_path_complex_is_contractible():
    N = nerve_from_keys([0.01, 0.01], [((0,), (1,)), ((1,), (0,))])
    assert len(N) == 5
    assert smallcase_cubical_oracle(N, {((0,), ()): 1, ((1,), ()): -1}, 0).bounds
    assert not smallcase_cubical_oracle(N, {((0,), ()): 1}, 0).bounds


def test_size_limits():
    N = nerve_from_keys([0.01] * 4, [((0,), (1, 2, 3))])
    with pytest.raises(InputError):
        smallcase_cubical_oracle(N, {}, 3)
    with pytest.raises(InputError):
        smallcase_cubical_oracle(triangle_nerve(), {((0,), ()): 1}, 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-4, 4), min_size=4, max_size=4), min_size=1, max_size=5))
def test_snf_rank_matches_numpy(rows):
    A = np.array(rows)
    diag, U = smith_normal_form(rows)
    assert len(diag) == np.linalg.matrix_rank(A)
    assert all(d > 0 for d in diag)
    assert all(b % a == 0 for a, b in zip(diag, diag[1:]))
    assert round(abs(np.linalg.det(np.array(U, float)))) == 1


def test_masses_of_a_chain():
    N = triangle_nerve()
    u = chain_star_masses(N, loop())
    assert u[((0,), ())] == pytest.approx(2 * 0.01)  # edges (0,1) and (0,2) pinned at 0
    assert u[((0, 1), ())] == pytest.approx(2 * 0.01)
