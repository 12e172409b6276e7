import math

import numpy as np
import pytest

from nervecraft.constants import derive_multiplicity_constants, omega
from nervecraft.errors import InputError
from nervecraft.good_cover import GoodCover
from nervecraft.metric_core import circle, flat_torus
from nervecraft.multiplicity import (
    build_layers, compute_order_and_cores, high_multiplicity_tail, layer_invariants,
    multiplicity_function,
)

from conftest import stages


@pytest.fixture(scope="module")
def line():
    return circle(1.0, 1000)


def test_disjoint_cover(line):
    cover = GoodCover([0, 100, 200], [0.01] * 3, False, False, 1.0)
    prof = multiplicity_function(line, cover)
    assert prof.m.max() == 1
    assert prof.volume_at_least(2) == 0.0
    dec = compute_order_and_cores(line, cover, build_layers(line, cover))
    assert dec.depth == 1 and list(dec.layer(1)) == [0, 1, 2]
    assert dec.order_edges == []
    assert list(dec.max_of_layer[0]) == [0, 1, 2]
    tenth = np.zeros(line.n_vertices, bool)
    tenth[[999, 0, 1, 99, 100, 101, 199, 200, 201]] = True
    assert np.array_equal(dec.core_of_layer[0], tenth)
    tail, _ = high_multiplicity_tail(line, cover, None, 0.01)
    assert tail.vacuous and tail.tail_bound_holds


def test_identical_balls(line):
    cover = GoodCover([50, 50], [0.01, 0.01], False, False, 1.0)
    prof = multiplicity_function(line, cover)
    vol = line.weights[prof.m > 0].sum()
    assert prof.m.max() == 2
    assert prof.volume_at_least(2) == pytest.approx(vol)
    dec = build_layers(line, cover)
    assert [list(l) for l in dec.layers] == [[0], [1]]


def test_region_restricts_participation(line):
    cover = GoodCover([0, 500], [0.01, 0.01], False, False, 1.0)
    dec = build_layers(line, cover, U=[3])
    assert list(dec.participating) == [0]
    with pytest.raises(InputError):
        build_layers(line, cover, U=np.zeros(line.n_vertices, bool))


def test_three_ball_chain(line):
    # B_j large, B_k bridges into a lower layer, B_i small: 2 r_i <= r_k <= r_j
    cover = GoodCover([0, 12, 18], [0.008, 0.004, 0.002], False, False, 1.0)
    dec = compute_order_and_cores(line, cover, build_layers(line, cover))
    assert [list(l) for l in dec.layers] == [[0, 2], [1]]
    assert dec.order_edges == [(2, 0, 1)]
    assert list(dec.max_of_layer[0]) == [0]
    inv = layer_invariants(line, cover, dec)
    assert all(ok for ok, _ in inv.values()), inv


def test_torus_layers(torus_stages, C2):
    st = torus_stages
    dec = compute_order_and_cores(st.M, st.cover, build_layers(st.M, st.cover))
    assert dec.depth <= C2.gamma * math.log(100) + 1
    prof = multiplicity_function(st.M, st.cover)
    assert prof.m.min() >= 1 and prof.m.max() <= C2.eta
    inv = layer_invariants(st.M, st.cover, dec, C2)
    assert all(ok for ok, _ in inv.values()), inv


def test_torus_tail(torus_stages, C2, tmp_path):
    st = torus_stages
    prof, dec = high_multiplicity_tail(st.M, st.cover, None, 0.01, C2)
    assert prof.tail_bound_holds
    tail = [prof.tail[k] for k in sorted(prof.tail)]
    assert all(a >= b for a, b in zip(tail, tail[1:]))
    F = [prof.F[k] for k in sorted(prof.F)]
    assert all(a >= b for a, b in zip(F, F[1:]))
    assert prof.neighborhood_volume == pytest.approx(st.M.total_volume)
    for lam in range(1, dec.depth + 1):
        vals = [prof.Lmu.get((mu, lam), 0.0) for mu in range(1, 8)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
    path = tmp_path / "profile.csv"
    prof.to_csv(path)
    assert path.read_text().splitlines()[0] == "lambda,volume_MU,volume_L1,F"


def test_bumpy_torus_decay(C2):
    st = stages("bumpy_torus")
    prof, dec = high_multiplicity_tail(st.M, st.cover, None, 0.01, C2)
    assert prof.tail_slope < 0
    assert all(r["holds"] for r in prof.decay_checks)
    assert prof.tail_bound_holds


def test_subregion_tail(torus_stages, C2):
    st = torus_stages
    U = np.arange(0, 300)
    prof, _ = high_multiplicity_tail(st.M, st.cover, U, 0.005, C2)
    assert prof.tail_bound_holds
    assert prof.neighborhood_volume == pytest.approx(st.M.weights[U].sum())  # h = w, open nbhd adds nothing
    with pytest.raises(InputError):
        high_multiplicity_tail(st.M, st.cover, U, 0.5, C2)


def test_constants_identities():
    for n in (1, 2, 3):
        c = derive_multiplicity_constants(n)
        K = 10.0 ** (4 * (n + 3))
        assert c.eta >= 1 and c.alpha > 0 and c.beta > 0
        assert math.exp(-c.alpha) == pytest.approx(1 - c.c_prime, abs=1e-12)
        assert c.eta == pytest.approx(K * K, rel=1e-12)
        assert c.gamma == pytest.approx(c.eta / math.log(2), rel=1e-12)
        assert c.beta == pytest.approx(math.log(2) / c.eta, rel=1e-12)
        assert len(c.derivation_log) >= 8


def test_constants_large_n_stay_exact(tmp_path):
    c = derive_multiplicity_constants(4)
    assert math.isinf(c.C_lemma5)
    d = c.to_json()
    assert isinstance(d["C_lemma5"], str) and "e+" in d["C_lemma5"]
    c.dump(tmp_path / "c.json")


def test_omega():
    assert omega(2) == pytest.approx(math.pi)
    assert omega(3) == pytest.approx(4 * math.pi / 3)
