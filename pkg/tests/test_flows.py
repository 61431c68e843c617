import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypocone import flows
from hypocone.flows import ControlSchedule, IntegrationError, exp_map, integrate_admissible
from hypocone.models import get_model, mumford_exp_branched
from hypocone.solver import extremal


def test_integrate_heat_drift_only():
    path = integrate_admissible(get_model("heat"), ControlSchedule.constant([0, 0], 1.0), [0.4, -0.2, 0.0])
    np.testing.assert_allclose(path.end, [0.4, -0.2, -1.0], atol=1e-14)
    assert path.s[-1] == pytest.approx(1.0)


def test_integrate_kolmogorov_drift_only():
    path = integrate_admissible(get_model("kolmogorov"), ControlSchedule.constant([0], 1.0), [1, 0, 0])
    np.testing.assert_allclose(path.end, [1, 1, -1], atol=1e-10)


def test_integrate_mumford_quarter_turn():
    path = integrate_admissible(get_model("mumford"), ControlSchedule.constant([1], math.pi / 2), np.zeros(4))
    np.testing.assert_allclose(path.end, [math.pi / 2, 1, 1, -math.pi / 2], atol=1e-8)


def test_integrate_multi_segment_matches_composition():
    model = get_model("cmp")
    sched = ControlSchedule(((0.3, (1.0,)), (0.5, (-2.0,)), (0.2, (0.5,))))
    z = np.array([0.2, 0.1, -0.3, 0.0])
    expect = z
    for dur, w in sched.segments:
        expect = exp_map(model, w, dur, expect, "closed")
    path = integrate_admissible(model, sched, z)
    np.testing.assert_allclose(path.end, expect, atol=1e-10)
    assert path.end[-1] == z[-1] - sched.total_duration


def test_schedule_validation():
    with pytest.raises(ValueError):
        ControlSchedule(())
    with pytest.raises(ValueError):
        ControlSchedule(((0.0, (1.0,)),))
    with pytest.raises(ValueError):
        integrate_admissible(get_model("heat"), ControlSchedule.constant([0, 0], 0.1), [0, 0, 0], step=0.5)


def test_control_dimension_checked():
    with pytest.raises(ValueError):
        exp_map(get_model("heisenberg_heat"), [1.0], 1.0, np.zeros(4))


def test_blow_up_is_reported():
    # omega = 0 OU flow grows like e^s; a huge start overflows
    with pytest.raises(IntegrationError) as info:
        integrate_admissible(get_model("ou"), ControlSchedule.constant([0.0], 2.0), [1e308, 0.0], step=0.01)
    assert info.value.s > 0


def test_exp_map_mumford_no_steering():
    z = np.array([0.7, 1.0, -2.0, 0.5])
    s = 1.3
    expect = [0.7, 1 + s * math.cos(0.7), -2 + s * math.sin(0.7), 0.5 - s]
    for method in ("closed", "rk4"):
        np.testing.assert_allclose(exp_map(get_model("mumford"), [0.0], s, z, method), expect, atol=1e-10)


def test_mumford_sinc_form_matches_branched_form(rng):
    model = get_model("mumford")
    for _ in range(50):
        z = rng.normal(size=4)
        w, s = rng.normal(), rng.uniform(0, 2)
        np.testing.assert_allclose(exp_map(model, [w], s, z, "closed"), mumford_exp_branched(w, s, z), atol=1e-12)
    z = rng.normal(size=4)
    np.testing.assert_allclose(exp_map(model, [0.0], 0.8, z, "closed"), mumford_exp_branched(0.0, 0.8, z), atol=0)


def test_exp_map_heisenberg_first_generator():
    c, s = 1.5, 0.8
    x, y, z, t = 0.3, -0.4, 0.1, 1.0
    out = exp_map(get_model("heisenberg_heat"), [c, 0.0], s, [x, y, z, t])
    np.testing.assert_allclose(out, [x + c * s, y, z - c * s * y / 2, t - s], atol=1e-14)


def test_exp_map_cmp_drift():
    np.testing.assert_allclose(exp_map(get_model("cmp"), [0.0], 1.0, [1, 0, 0, 0]), [1, 1, 1, -1], atol=1e-14)


def test_exp_map_zero_time_is_identity(model):
    z = np.linspace(-1, 1, model.dim)
    np.testing.assert_array_equal(exp_map(model, np.ones(model.m), 0.0, z), z)


def test_exp_map_rejects_negative_time():
    with pytest.raises(ValueError):
        exp_map(get_model("heat"), [0, 0], -1.0, np.zeros(3))


def test_closed_form_agrees_with_rk4(model, rng):
    if model.exp_closed_form is None:
        pytest.skip("no closed form")
    n = 100
    z = rng.uniform(-1, 1, (n, model.dim))
    w = rng.uniform(-1.5, 1.5, (n, model.m))
    s = rng.uniform(0, 2, n)
    diff = exp_map(model, w, s, z, "closed") - exp_map(model, w, s, z, "rk4")
    assert np.max(np.abs(diff)) <= 1e-8


@pytest.mark.parametrize("name", ["mumford", "cmp", "heisenberg_heat", "kolmogorov", "linked", "grushin"])
@settings(max_examples=40, deadline=None)
@given(s1=st.floats(0, 1), s2=st.floats(0, 1), w=st.floats(-2, 2), x=st.floats(-2, 2))
def test_semigroup_property(name, s1, s2, w, x):
    model = get_model(name)
    omega = np.full(model.m, w)
    z = np.full(model.dim, 0.3)
    z[0] = x
    lhs = exp_map(model, omega, s1 + s2, z)
    rhs = exp_map(model, omega, s2, exp_map(model, omega, s1, z))
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_right_translation_examples():
    assert flows.right_translation_residual(get_model("heat"), [0.3, -1], 0.7, [1, 2, 3]) <= 1e-12
    assert flows.right_translation_residual(get_model("mumford"), [1.0], 1.0, [1, 2, 3, 0]) <= 1e-8
    assert flows.right_translation_residual(get_model("kolmogorov"), [2.0], 0.5, [1, 1, 0]) <= 1e-8


def test_heisenberg_loop_examples():
    np.testing.assert_allclose(flows.heisenberg_loop(1.0, 1.0, np.zeros(4)), [0, 0, 1, -4], atol=1e-10)
    z0 = np.array([0.3, -1.0, 2.0, 0.5])
    np.testing.assert_allclose(flows.heisenberg_loop(0.0, 0.7, z0), z0 - [0, 0, 0, 2.8], atol=1e-15)
    np.testing.assert_allclose(flows.heisenberg_loop(2.0, 0.5, [1, 1, 1, 0], method="rk4"), [1, 1, 2, -2],
                               atol=1e-8)


def test_mumford_loop_examples():
    np.testing.assert_allclose(flows.mumford_forward_leg(1.0, np.zeros(4)), [2 * math.pi, 0, 0, -1], atol=1e-12)
    np.testing.assert_allclose(flows.mumford_loop(1.0, np.zeros(4)), [0, 0, 0, -2], atol=1e-12)
    z0 = np.array([0.4, 1.0, -1.0, 3.0])
    assert flows.mumford_loop(2 * math.pi, z0)[-1] == pytest.approx(3.0 - 4 * math.pi)
    with pytest.raises(ValueError):
        flows.mumford_loop(0.0, z0)


def test_mumford_loop_rk4_agrees():
    z0 = np.array([0.4, 1.0, -1.0, 3.0])
    np.testing.assert_allclose(flows.mumford_loop(0.5, z0, method="rk4"), z0 - [0, 0, 0, 1.0], atol=1e-8)


def test_harnack_chain_examples():
    chain = flows.harnack_chain(get_model("heat"), [0, 0], 1.0, 3, [0.5, -0.5, 0.0])
    np.testing.assert_allclose(chain, [[0.5, -0.5, 0], [0.5, -0.5, -1], [0.5, -0.5, -2], [0.5, -0.5, -3]])
    chain = flows.harnack_chain(get_model("kolmogorov"), [0], 1.0, 2, [1, 0, 0])
    np.testing.assert_allclose(chain, [[1, 0, 0], [1, 1, -1], [1, 2, -2]], atol=1e-14)
    mum = get_model("mumford")
    chain = flows.harnack_chain(mum, [1.0], math.pi, 2, np.zeros(4))
    np.testing.assert_allclose(chain[-1], exp_map(mum, [1.0], 2 * math.pi, np.zeros(4)), atol=1e-8)
    with pytest.raises(ValueError):
        flows.harnack_chain(mum, [1.0], 1.0, 0, np.zeros(4))


def test_separation_ratio_examples(rng):
    heat = get_model("heat")
    v = np.array([0.6, -0.8])
    u = extremal(heat, v)
    z = rng.uniform(-2, 2, (100, 3))
    mean, dev = flows.separation_ratio(heat, u, [0, 0], 0.5, z)
    assert mean == pytest.approx(math.exp(-0.5 * (v @ v)), rel=1e-12)
    assert dev <= 1e-12 * mean
    one = lambda p: np.ones(np.shape(p)[:-1])  # noqa: E731
    mum = get_model("mumford")
    assert flows.separation_ratio(mum, one, [0.7], 0.5, rng.normal(size=(10, 4))) == (1.0, 0.0)
    kol = get_model("kolmogorov")
    u = extremal(kol, [0.9, 0.0])
    mean, dev = flows.separation_ratio(kol, u, [0.0], 0.4, rng.uniform(-2, 2, (100, 3)))
    assert mean == pytest.approx(math.exp(-0.4 * 0.81), rel=1e-12)
    assert dev <= 1e-12


def test_separation_ratio_rejects_vanishing_u():
    zero = lambda p: np.zeros(np.shape(p)[:-1])  # noqa: E731
    with pytest.raises(ValueError):
        flows.separation_ratio(get_model("heat"), zero, [0, 0], 1.0, np.zeros((3, 3)))


def test_bch_heisenberg_exact():
    heis = get_model("heisenberg_heat")
    assert flows.bch_loop_residual(heis, 1, 2, 1e-2) <= 1e-1 * 1e-2


def test_bch_heat_vanishes():
    heat = get_model("heat")
    for j, k in ((0, 1), (1, 2), (0, 2)):
        assert flows.bch_loop_residual(heat, j, k, 0.1, [0.3, 0.2, 1.0]) <= 1e-10


def test_bch_kolmogorov_direction():
    kol = get_model("kolmogorov")
    s = 1e-2
    z0 = np.array([0.2, -0.1, 0.0])
    inc = (flows.bch_loop_endpoint(kol, 1, 0, s, z0) - z0) / s**2
    # [d_x + Y, Y] = [d_x, x d_y] = d_y
    np.testing.assert_allclose(inc, [0, 1, 0], atol=5e-2)
    np.testing.assert_array_equal(flows.loop_bracket(kol, 1, 0)(z0), [0, 1, 0])


@pytest.mark.parametrize("name", ["kolmogorov", "linked"])
def test_bch_loop_exact_for_step_two(name):
    # two-step nilpotent: the loop increment is exactly s^2 [A, B]
    model = get_model(name)
    z0 = np.linspace(0.1, 0.4, model.dim)
    assert flows.bch_loop_residual(model, 1, 0, 1e-2, z0) <= 1e-9


@pytest.mark.parametrize("name", ["mumford", "cmp", "ou"])
def test_bch_residual_rate(name):
    model = get_model(name)
    z0 = np.linspace(0.1, 0.4, model.dim)
    r = [flows.bch_loop_residual(model, 1, 0, s, z0) for s in (4e-2, 2e-2, 1e-2)]
    assert r[2] < r[1] < r[0]
    assert r[0] / r[1] >= 1.5 and r[1] / r[2] >= 1.5
