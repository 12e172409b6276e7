import math

import mpmath
import pytest

from nervecraft.deformation import (
    basic_interval_map, delta_schedule, delta_value, epsilon_threshold, federer_fleming_stretch,
    init_ledger, log_product, make_schedule, product_bound, run_thick_thin_deformation,
    run_thin_deformation,
)
from nervecraft.errors import InputError, InvariantViolation, ScheduleError
from nervecraft.good_cover import load_cover
from nervecraft.metric_core import circle
from nervecraft.nerve import build_nerve, nerve_from_keys

from oracles import log_product_oracle

DYADIC = [0.01, 0.005, 0.0025, 0.00125]


def dyadic_nerve():
    return nerve_from_keys(DYADIC, [((0,), (1, 2, 3))])


def scaled_ledger(N, sched, c):
    u = {k: c * sched.epsilon * F.r1**sched.n * math.exp(-sched.beta * F.d)
         for k, F in N.faces.items()}
    return init_ledger(N, u)


@pytest.mark.parametrize("t,want", [(0.05, 0.0), (0.5, 0.5), (0.2, 0.125), (0.95, 1.0), (0.1, 0.0)])
def test_basic_interval_map(t, want):
    assert basic_interval_map(1.0, 0.1, t) == pytest.approx(want)


def test_basic_interval_map_rejects():
    with pytest.raises(InputError):
        basic_interval_map(1.0, 0.5, 0.2)
    with pytest.raises(InputError):
        basic_interval_map(1.0, 0.1, 1.5)


def test_delta_value_hand():
    assert delta_value(2, 1.0, 0.1, 3) == pytest.approx(math.sqrt(0.2 * math.exp(-3) / math.pi))
    assert delta_value(2, 1.0, 0.1, 3) == pytest.approx(0.0563, abs=1e-4)


def test_delta_ratio_is_geometric():
    n, beta, eps = 3, 0.7, 1e-3
    for k in range(4, 12):
        r = delta_schedule(n, beta, eps, k + 1) / delta_schedule(n, beta, eps, k)
        assert r == pytest.approx(math.exp(-beta / n), rel=1e-12)


def test_schedule_starts_at_n_plus_1():
    with pytest.raises(ScheduleError):
        delta_schedule(2, 1.0, 0.1, 2)
    with pytest.raises(ScheduleError):
        delta_schedule(2, 0.01, 0.49, 3)


def test_zero_epsilon_gives_unit_product():
    assert log_product(2, 1.0, 0.0) == 0.0
    assert product_bound(2, 1.0, 0.0) == 1.0


@pytest.mark.parametrize("n,beta,eps", [(1, 1.0, 0.01), (2, 1.0, 0.05), (2, 0.3, 1e-4), (4, 2.0, 1e-3)])
def test_log_product_matches_direct_sum(n, beta, eps):
    assert log_product(n, beta, eps) == pytest.approx(float(log_product_oracle(n, beta, eps)), rel=1e-9)


@pytest.mark.parametrize("n,beta", [(1, 1.0), (2, 1.0), (2, 0.5), (3, 2.0)])
def test_epsilon_threshold_brackets(n, beta):
    eps = epsilon_threshold(n, beta)
    assert log_product_oracle(n, beta, eps) < mpmath.log(2)
    above = min(0.5, eps * (1 + 1e-6))
    if above < 0.5:
        assert log_product_oracle(n, beta, above) >= mpmath.log(2)


def test_stretch():
    assert federer_fleming_stretch(0) == 1.0
    assert federer_fleming_stretch(2) == 36.0


# --- ledger --------------------------------------------------------------


def two_ball_nerve():
    M = circle(0.02, 40)
    cover = load_cover([{"center_id": 0, "radius": 0.01}, {"center_id": 20, "radius": 0.01}], 1.0)
    return build_nerve(M, cover)


def test_init_ledger_cases():
    N = two_ball_nerve()
    assert len(N) == 5
    led = init_ledger(N, {k: 0.0 for k in N.faces})
    assert len(led.u) == 5 and led.k_current == 1
    empty = nerve_from_keys([], [])
    assert init_ledger(empty, {}).u == {}
    bad = {k: 0.0 for k in N.faces}
    bad[next(iter(bad))] = -1.0
    with pytest.raises(InputError):
        init_ledger(N, bad)
    with pytest.raises(InputError):
        init_ledger(N, {})


def test_zero_ledger_is_nerve_null():
    N = dyadic_nerve()
    sched = make_schedule(2, 1.0, 0.1)
    cert, trace = run_thin_deformation(N, scaled_ledger(N, sched, 0.0), sched)
    assert cert.kind == "nerve_null"
    assert all(row["u"] == 0 for row in cert.witness["n_faces"])


def test_half_threshold_ledger_on_dyadic_nerve():
    N = dyadic_nerve()
    assert N.dim_max == 3
    sched = make_schedule(2, 1.0, 0.1)
    assert sched.product_bound < 2
    led = scaled_ledger(N, sched, 0.5)
    cert, trace = run_thin_deformation(N, led, sched)
    assert cert.kind == "nerve_null"
    f = (1 - 2 * delta_value(2, 1.0, 0.1, 3)) ** -2
    assert cert.witness["cumulative_factor"] == pytest.approx(f, rel=1e-14)
    assert cert.witness["cumulative_factor"] < 2
    assert len(cert.witness["n_faces"]) == len(N.faces_of_dim(2))
    for row in cert.witness["n_faces"]:
        key = (tuple(row["face"]["I_1"]), tuple(row["face"]["I_01"]))
        F = N.faces[key]
        assert row["u"] == pytest.approx(led.u[key] * f, rel=1e-14)
        assert row["u"] < F.volume
    # the input ledger is untouched
    assert led.k_current == 3


def test_large_ledger_fails_hypothesis():
    N = dyadic_nerve()
    sched = make_schedule(2, 1.0, 0.1)
    led = scaled_ledger(N, sched, 0.0)
    key = ((0,), (1, 2))
    F = N.faces[key]
    led.u[key] = 10 * sched.epsilon * F.r1**2
    cert, _ = run_thin_deformation(N, led, sched)
    assert cert.kind == "hypothesis_failed"
    assert cert.witness["face"] == {"I_1": [0], "I_01": [1, 2]}


def test_trace_is_deterministic(tmp_path):
    N = dyadic_nerve()
    sched = make_schedule(2, 1.0, 0.1)
    outs = []
    for i in range(2):
        _, trace = run_thin_deformation(N, scaled_ledger(N, sched, 0.3), sched)
        p = tmp_path / f"t{i}.jsonl"
        trace.to_jsonl(p)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


# --- thick/thin ----------------------------------------------------------


def thick_schedule(V0, dim_max=None):
    return make_schedule(2, 1.0, 0.1, V0=V0, C1=1.0, C_radius=0.02, dim_max=dim_max)


def test_all_thin_gives_zero_norm():
    N = dyadic_nerve()
    sched = thick_schedule(1.0)  # C1 V0 r1 <= 0.01 < eps
    cert, _ = run_thick_thin_deformation(N, scaled_ledger(N, sched, 0.5), sched)
    assert cert.kind == "norm_bound"
    assert cert.witness["thick_faces"] == 0
    assert cert.witness["sum_abs_c"] == 0 and cert.witness["sum_abs_c_int"] == 0


def test_single_thick_top_face():
    N = nerve_from_keys([0.01, 0.01, 0.01], [((0,), (1, 2))])
    sched = thick_schedule(1e3, dim_max=N.dim_max)
    led = scaled_ledger(N, sched, 0.0)
    key = ((0,), (1, 2))
    led.u[key] = 0.5 * N.faces[key].volume
    cert, _ = run_thick_thin_deformation(N, led, sched)
    assert cert.witness["thick_faces"] >= 1
    assert cert.witness["sum_abs_c"] <= 0.5
    assert cert.witness["sum_abs_c_int"] == 0


def test_thick_face_above_dimension_bound():
    sched = thick_schedule(10.0)  # ratio 2, bound floor(ln 2) = 0
    assert sched.thick_dim_bound == 0
    N2 = nerve_from_keys([1.0, 1.0], [((0,), (1,))])
    with pytest.raises(InvariantViolation):
        run_thick_thin_deformation(N2, scaled_ledger(N2, sched, 0.0), sched)


def test_thick_needs_constants():
    N = dyadic_nerve()
    sched = make_schedule(2, 1.0, 0.1)
    with pytest.raises(InputError):
        run_thick_thin_deformation(N, scaled_ledger(N, sched, 0.0), sched)
