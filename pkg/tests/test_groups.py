import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypocone import groups
from hypocone.models import get_model

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def points(dim):
    return st.lists(finite, min_size=dim, max_size=dim).map(np.array)


def test_heisenberg_compose_opposite_sign():
    law = groups.heisenberg_law(kappa=-1.0)
    out = law.compose([1, 0, 0, 0], [0, 1, 0, 0])
    np.testing.assert_array_equal(out[:3], [1, 1, -1])


def test_heisenberg_default_law_matches_fields():
    # with kappa = 1/2 the skew term is +1/2 for the same pair
    out = groups.heisenberg_law().compose([1, 0, 0, 0], [0, 1, 0, 0])
    np.testing.assert_array_equal(out, [1, 1, 0.5, 0])


def test_identity_composition(model):
    if model.law is None:
        pytest.skip("no group law")
    z = np.linspace(-1, 1, model.dim)
    np.testing.assert_array_equal(model.law.compose(model.law.identity, z), z)


def test_kolmogorov_compose():
    out = groups.kolmogorov_law(1).compose([1, 0, 0], [0, 0, 1])
    np.testing.assert_array_equal(out, [1, -1, 1])


def test_mumford_compose_half_turn():
    z = np.array([0.3, 1.2, -0.7, 2.0])
    out = groups.mumford_law().compose([np.pi, 0, 0, 0], z)
    np.testing.assert_allclose(out, [np.pi + 0.3, -1.2, 0.7, 2.0], atol=1e-15)


def test_euclidean_inverse():
    np.testing.assert_array_equal(groups.euclidean_law(3).inverse([1.0, -2.0, 3.0]), [-1.0, 2.0, -3.0])


def test_heisenberg_inverse():
    np.testing.assert_array_equal(groups.heisenberg_law().inverse([1.0, 2.0, 3.0, 0.0]), [-1, -2, -3, 0])


def test_kolmogorov_inverse():
    xi, eta, tau = 1.5, -0.5, 2.0
    np.testing.assert_allclose(groups.kolmogorov_law(1).inverse([xi, eta, tau]), [-xi, -eta - tau * xi, -tau])


def test_dilation_examples():
    assert groups.dilate(get_model("kolmogorov").dilation, 2, [1, 1, 1]).tolist() == [2, 8, 4]
    assert groups.dilate(get_model("cmp").dilation, 2, [1, 1, 1, 1]).tolist() == [2, 16, 8, 4]


def test_dilation_at_one_is_identity(model):
    if model.dilation is None:
        pytest.skip("no dilation")
    z = np.linspace(-2, 3, model.dim)
    np.testing.assert_array_equal(model.dilation.apply(1.0, z), z)


def test_dilation_rejects_nonpositive_r():
    with pytest.raises(ValueError):
        groups.product_dilation([1, 3]).apply(0.0, [1, 1, 1])


def test_dilation_rejects_zero_exponent():
    with pytest.raises(ValueError):
        groups.Dilation((1, 0, 2))


def test_compose_dimension_mismatch():
    with pytest.raises(ValueError):
        groups.kolmogorov_law(1).compose([1, 0], [0, 0, 1])


def test_automorphism_residual_examples(rng):
    heis = get_model("heisenberg_heat")
    a, b = rng.normal(size=(2, 4))
    assert groups.automorphism_residual(heis.law, heis.dilation, 3.0, a, b) <= 1e-10
    assert groups.automorphism_residual(heis.law, heis.dilation, 1.0, a, b) == 0.0
    kol = get_model("kolmogorov")
    a, b = rng.normal(size=(2, 3))
    assert groups.automorphism_residual(kol.law, kol.dilation, 0.5, a, b) <= 1e-10


def test_kolmogorov_law_m2_blocks():
    law = groups.kolmogorov_law(2)
    a = np.array([1.0, 2.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 0.0, 0.0, 3.0])
    np.testing.assert_array_equal(law.compose(a, b), [1, 2, -3, -6, 3])


def test_layers_of_heisenberg():
    layers = get_model("heisenberg_heat").layers
    assert layers.first == (0, 1)
    assert layers.last == (2,)
    assert layers.sizes == (2, 1)


def test_batch_composition_broadcasts(rng):
    law = groups.cmp_law()
    a = rng.normal(size=(7, 4))
    b = rng.normal(size=4)
    batch = law.compose(a, b)
    assert batch.shape == (7, 4)
    np.testing.assert_array_equal(batch[3], law.compose(a[3], b))


@pytest.mark.parametrize("name", ["heisenberg_heat", "kolmogorov", "mumford", "cmp", "grushin_lifted", "ou",
                                  "linked", "heat"])
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_group_axioms_property(name, data):
    law = get_model(name).law
    a, b, c = (data.draw(points(law.dim)) for _ in range(3))
    lhs = law.compose(law.compose(a, b), c)
    rhs = law.compose(a, law.compose(b, c))
    assert np.max(groups.scaled_residual(lhs, rhs)) <= 1e-10
    assert np.max(groups.scaled_residual(law.compose(a, law.inverse(a)), law.identity)) <= 1e-10
    assert np.max(groups.scaled_residual(law.compose(law.inverse(a), a), law.identity)) <= 1e-10


@pytest.mark.parametrize("name", ["heisenberg_heat", "kolmogorov", "cmp", "grushin_lifted", "linked", "heat"])
@settings(max_examples=40, deadline=None)
@given(data=st.data(), r=st.floats(0.1, 4.0))
def test_dilation_automorphism_property(name, data, r):
    model = get_model(name)
    a, b = data.draw(points(model.dim)), data.draw(points(model.dim))
    lhs = model.dilation.apply(r, model.law.compose(a, b))
    rhs = model.law.compose(model.dilation.apply(r, a), model.dilation.apply(r, b))
    assert np.max(groups.scaled_residual(lhs, rhs)) <= 1e-10
