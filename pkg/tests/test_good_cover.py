import math

import numpy as np
import pytest

from nervecraft.errors import InputError, ResolutionExhausted
from nervecraft.good_cover import (
    GoodCover, build_good_cover, cascade_holds, count_scale_neighbors, find_good_ball,
    is_good_ball, ladder, load_cover, scale_neighbor_counts, validate_cover,
)
from nervecraft.metric_core import ball, flat_torus, max_ball_volume, thin_cylinder

from conftest import instance, stages


def test_flat_torus_small_ball_is_good():
    M = flat_torus(1, 800)
    v = is_good_ball(M, 0, 1 / 200, 1.0)
    assert v.condition_A and v.condition_C and v.condition_B and v.good
    # continuum value pi/4e4 for |B(p, 1/200)|
    assert v.volume == pytest.approx(math.pi / 4e4, rel=0.05)
    assert v.volume_bound == pytest.approx(1e10 * (1 / 200) ** 5)
    assert v.growth_ratio <= 1e20


def test_radius_above_one_hundredth_not_good():
    v = is_good_ball(flat_torus(1, 50), 3, 1 / 50, 1.0)
    assert not v.condition_C and not v.good


def test_thin_band_fails_volume_bound():
    eps = 1e-5
    M = thin_cylinder(eps, 1, 4000)
    V1 = float(ball(M, 0, 1.0).volume)
    v = is_good_ball(M, 0, 1e-3, V1)
    assert v.volume == pytest.approx(2e-3 * eps, rel=0.15)
    assert not v.condition_B


def test_bad_arguments():
    M = flat_torus(1, 10)
    with pytest.raises(InputError):
        is_good_ball(M, 0, 0.0, 1.0)
    with pytest.raises(InputError):
        is_good_ball(M, 0, 0.01, 0.0)


@pytest.mark.parametrize("name", ["flat_torus", "round_sphere"])
def test_first_rung_succeeds(name):
    M = instance(name)
    R, trace = find_good_ball(M, 17, stages(name).V1)
    assert R == 1e-2
    assert len(trace) == 1 and trace[0]["reasonable_growth"]


def test_resolution_guard():
    M = flat_torus(1, 8)
    with pytest.raises(ResolutionExhausted):
        find_good_ball(M, 0, 1.0)


def test_cascade_inequality_on_synthetic_failure():
    # a ball that fails reasonable growth must show the density drop
    M = thin_cylinder(1e-3, 10, 32)
    res = ladder(M, 1.0, [0], min_rung_over_h=0.0)
    for rec in res.trace:
        for ok, ds, db in zip(rec["reasonable_growth"], rec["density_small"], rec["density_big"]):
            if not ok:
                assert cascade_holds(ds, db)


def test_cascade_identity_arithmetic():
    n, R = 2, 1e-2
    big, small = 1.0, 1e-21  # growth ratio 1e21 > 1e20
    ds, db = small / (R / 100) ** n, big / (100 * R) ** n
    assert cascade_holds(ds, db)


@pytest.mark.parametrize("name", ["flat_torus", "round_sphere", "thin_cylinder"])
def test_built_cover_validates(name):
    st = stages(name)
    rep = validate_cover(st.M, st.cover)
    assert rep.passed, rep.first_violation
    assert st.cover.half_cover_ok and st.cover.sixth_disjoint_ok
    assert set(st.cover.radii) == {1e-2}


def test_single_ball_cover():
    M = flat_torus(1e-3, 8)
    cover = build_good_cover(M, min_rung_over_h=0.0)
    assert len(cover) == 1


def test_identical_balls_violate_disjointness():
    M = flat_torus(1, 50)
    cover = GoodCover([7, 7], [0.01, 0.01], False, False, 1.0)
    rep = validate_cover(M, cover)
    assert not rep.passed
    assert not rep.conditions[3]["ok"]
    assert rep.conditions[3]["balls"] == [0, 1]
    assert rep.conditions[3]["vertex"] == 7


def test_missing_vertex_is_named(torus_stages):
    st = torus_stages
    keep = st.cover.centers != 4242
    cover = GoodCover(st.cover.centers[keep], st.cover.radii[keep], False, False, st.V1)
    rep = validate_cover(st.M, cover)
    assert rep.first_violation == {"condition": 2, "ok": False, "vertex": 4242}


def test_scale_neighbors(torus_stages, C2):
    st = torus_stages
    M, cover = st.M, st.cover
    one = GoodCover([0], [0.01], False, False, 1.0)
    assert count_scale_neighbors(M, one, ball(M, 5050, 0.01)) == 0
    assert count_scale_neighbors(M, one, ball(M, 0, 0.01)) == 1
    counts = scale_neighbor_counts(M, cover)
    assert counts.max() <= C2.eta and counts.max() <= 50
    for c in (0, 123, 9999):
        i = int(np.flatnonzero(cover.centers == c)[0])
        assert count_scale_neighbors(M, cover, ball(M, c, 0.01)) == counts[i]


def test_cover_json_roundtrip(tmp_path, torus_stages):
    cover = torus_stages.cover
    p = tmp_path / "cover.json"
    cover.dump(p)
    back = load_cover(str(p), cover.V1)
    assert back.balls == cover.balls
    with pytest.raises(InputError):
        load_cover([{"center": 1}], 1.0)


def test_deterministic_cover():
    M = flat_torus(1, 30)
    a = build_good_cover(M, max_ball_volume(M, 1.0), min_rung_over_h=0.0)
    b = build_good_cover(M, max_ball_volume(M, 1.0), min_rung_over_h=0.0)
    assert a.balls == b.balls
