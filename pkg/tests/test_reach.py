import numpy as np
import pytest

from hypocone import reach
from hypocone.flows import exp_map
from hypocone.models import get_model


def _probes(rng, n, min_margin=0.2):
    mum = get_model("mumford")
    out = []
    while len(out) < n:
        z = np.concatenate([rng.uniform(-1, 1, 1), rng.uniform(-0.7, 0.7, 2), rng.uniform(-0.9, -0.4, 1)])
        if reach.margin(mum, np.zeros(4), z) >= min_margin:
            out.append(z)
    return np.array(out)


def test_heat_endpoints_in_time_window():
    heat = get_model("heat")
    cloud = reach.sample_attainable(heat, [0, 0, 0.5], 500, 3, 2.0, 1.0, seed=1)
    t = cloud.endpoints[:, -1]
    assert np.all(t >= 0.5 - 1.0 - 1e-12) and np.all(t < 0.5)


def test_mumford_endpoints_in_cone():
    cloud = reach.sample_attainable(get_model("mumford"), np.zeros(4), 2000, 4, 3.0, 1.0, seed=2)
    y, w, t = cloud.endpoints[:, 1], cloud.endpoints[:, 2], cloud.endpoints[:, 3]
    assert np.all(np.hypot(y, w) <= -t + 1e-9)


def test_cmp_endpoints_in_parabolic_set():
    cloud = reach.sample_attainable(get_model("cmp"), np.zeros(4), 2000, 4, 3.0, 1.0, seed=3)
    y, w, t = cloud.endpoints[:, 1], cloud.endpoints[:, 2], cloud.endpoints[:, 3]
    assert np.all(t <= 0)
    assert np.all(y >= -1e-9)
    assert np.all(w**2 <= y * (-t) + 1e-9)


def test_sampler_is_deterministic():
    mum = get_model("mumford")
    a = reach.sample_attainable(mum, np.zeros(4), 300, 4, 3.0, 1.0, seed=7)
    b = reach.sample_attainable(mum, np.zeros(4), 300, 4, 3.0, 1.0, seed=7)
    c = reach.sample_attainable(mum, np.zeros(4), 300, 4, 3.0, 1.0, seed=8)
    np.testing.assert_array_equal(a.endpoints, b.endpoints)
    assert not np.array_equal(a.endpoints, c.endpoints)


def test_sampler_durations_and_controls_in_range():
    cloud = reach.sample_attainable(get_model("heisenberg_heat"), np.zeros(4), 400, 5, 1.5, 2.0, seed=4)
    assert np.all(cloud.durations > 0) and np.all(cloud.durations <= 2.0 / 5)
    assert np.all(np.abs(cloud.omegas) <= 1.5)
    assert cloud.omegas.shape == (400, 5, 2)


def test_sampler_argument_checks():
    mum = get_model("mumford")
    with pytest.raises(ValueError):
        reach.sample_attainable(mum, np.zeros(4), 10, 0, 1.0, 1.0, seed=0)
    with pytest.raises(ValueError):
        reach.sample_attainable(mum, np.zeros(4), 10, 2, -1.0, 1.0, seed=0)


def test_empty_sampler():
    cloud = reach.sample_attainable(get_model("mumford"), np.zeros(4), 0, 2, 1.0, 1.0, seed=0)
    assert len(cloud) == 0
    assert reach.interior_coverage(get_model("mumford"), np.zeros(4), cloud, np.zeros((3, 4)), 0.1) == 0.0


def test_diverging_paths_are_dropped():
    cloud = reach.sample_attainable(get_model("ou"), [1e308, 0.0], 20, 2, 1.0, 1.0, seed=0)
    assert cloud.dropped > 0
    assert len(cloud) + cloud.dropped == 20


def test_membership_examples():
    v = reach.membership(get_model("mumford"), np.zeros(4), [5, 0.5, 0, -1])
    assert v.verdict == "inside" and v.margin == pytest.approx(0.5)
    cmp = get_model("cmp")
    z0 = np.array([1.0, 0, 0, 0])
    v = reach.membership(cmp, z0, exp_map(cmp, [0.0], 1.0, z0))
    assert v.verdict == "boundary" and abs(v.margin) <= 1e-9
    v = reach.membership(get_model("heat"), [0.2, -0.1, 0.0], [3.0, 3.0, 0.5])
    assert v.verdict == "outside"


def test_membership_unknown_without_oracle():
    v = reach.membership(get_model("kolmogorov"), np.zeros(3), [0, 0, -1])
    assert v.verdict == "unknown"
    assert reach.margin(get_model("kolmogorov"), np.zeros(3), [0, 0, -1]) is None


def test_cmp_drift_points_all_on_boundary():
    cmp = get_model("cmp")
    for x in (-2.0, 0.5, 1.0, 3.0):
        z0 = np.array([x, 0.3, -0.2, 1.0])
        for s in (0.1, 1.0, 2.5):
            m = reach.margin(cmp, z0, exp_map(cmp, [0.0], s, z0))
            assert abs(m) <= 1e-9 * max(1.0, x**2 * s)


def test_driftless_box_oracle():
    oracle = reach.DriftlessOracle(box=[(-1, 1), (-1, 1), (-5, 5)])
    assert np.min(oracle(np.zeros(3), [0.5, 0.5, -1])) > 0
    assert np.min(oracle(np.zeros(3), [1.5, 0.5, -1])) < 0


def test_coverage_of_own_endpoints():
    mum = get_model("mumford")
    cloud = reach.sample_attainable(mum, np.zeros(4), 200, 4, 3.0, 1.0, seed=5)
    assert reach.interior_coverage(mum, np.zeros(4), cloud, cloud.endpoints[:20], 1e-12) == 1.0


def test_coverage_needs_probes():
    cloud = reach.sample_attainable(get_model("mumford"), np.zeros(4), 10, 2, 1.0, 1.0, seed=0)
    with pytest.raises(ValueError):
        reach.interior_coverage(get_model("mumford"), np.zeros(4), cloud, np.empty((0, 4)), 0.1)


@pytest.mark.slow
def test_mumford_interior_coverage():
    # larger controls and horizon than the soundness runs, so that a moderate
    # sample reaches the wide part of the cone
    mum = get_model("mumford")
    cloud = reach.sample_attainable(mum, np.zeros(4), 10_000, 4, 20.0, 1.5, seed=0)
    probes = _probes(np.random.default_rng(99), 200)
    assert reach.interior_coverage(mum, np.zeros(4), cloud, probes, 0.15) >= 0.9
