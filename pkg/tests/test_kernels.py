import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from hypocone import kernels
from hypocone.kernels import MartinSequence
from hypocone.models import get_model


def gaussian_oracle(z, zeta):
    """Transition density of dX = sqrt(2) dW, dY = -X dt, m = 1."""
    x, y, t = z
    xi, eta, tau = zeta
    d = t - tau
    cov = [[2 * d, -d**2], [-d**2, 2 * d**3 / 3]]
    return multivariate_normal(mean=[xi, eta - d * xi], cov=cov).pdf([x, y])


def test_kernel_vanishes_before_pole():
    assert kernels.kolmogorov_kernel(1, [0, 0, 0], [0, 0, 0]).value == 0.0
    assert kernels.kolmogorov_kernel(1, [1, 2, -1], [0, 0, 0]).value == 0.0
    assert kernels.heat_kernel(1, [0, -2.0], [0, 0]).value == 0.0


def test_kernel_value_at_unit_time():
    assert float(kernels.kolmogorov_kernel(1, [0, 0, 1], [0, 0, 0])) == pytest.approx(math.sqrt(3 / (2 * math.pi)),
                                                                                      rel=1e-15)


def test_kernel_against_gaussian_transition_density(rng):
    # the kernel prefactor makes it (2 pi)^{1/2} times the probability density
    for _ in range(50):
        z = np.array([rng.normal(), rng.normal(), rng.uniform(0.2, 2.0)])
        zeta = np.array([rng.normal(), rng.normal(), rng.uniform(-1.0, 0.1)])
        got = float(kernels.kolmogorov_kernel(1, z, zeta))
        assert got == pytest.approx(math.sqrt(2 * math.pi) * gaussian_oracle(z, zeta), rel=1e-10)


def test_kernel_m2_factorizes():
    z = np.array([0.3, -0.2, 0.1, 0.5, 1.2])
    zeta = np.array([0.1, 0.4, -0.3, 0.2, 0.0])
    a = kernels.kolmogorov_log_kernel(1, z[[0, 2, 4]], zeta[[0, 2, 4]])
    b = kernels.kolmogorov_log_kernel(1, z[[1, 3, 4]], zeta[[1, 3, 4]])
    assert kernels.kolmogorov_log_kernel(2, z, zeta) == pytest.approx(a + b, rel=1e-14)


def test_kernel_shape_checks():
    with pytest.raises(ValueError):
        kernels.kolmogorov_kernel(1, [0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        kernels.kolmogorov_kernel(0, [0], [0])


def test_kernel_mass():
    assert kernels.kolmogorov_mass() == pytest.approx(math.sqrt(2 * math.pi), rel=1e-2)


def test_kernel_mass_grid_oracle():
    # independent tensor-grid trapezoid in sheared coordinates u = y + x/2
    x = np.linspace(-12, 12, 801)
    u = np.linspace(-4, 4, 801)
    X, U = np.meshgrid(x, u, indexing="ij")
    z = np.stack([X, U - 0.5 * X, np.ones_like(X)], axis=-1)
    vals = np.exp(kernels.kolmogorov_log_kernel(1, z, np.zeros(3)))
    mass = np.trapezoid(np.trapezoid(vals, u, axis=1), x)
    assert mass == pytest.approx(math.sqrt(2 * math.pi), rel=1e-6)
    assert kernels.kolmogorov_mass() == pytest.approx(mass, rel=1e-6)


def test_kernel_mass_independent_of_time():
    assert kernels.kolmogorov_mass(0.3) == pytest.approx(kernels.kolmogorov_mass(2.0), rel=1e-6)


def test_heat_kernel_peak_and_mass():
    assert float(kernels.heat_kernel(1, [0.7, 1.0], [0.7, 0.0])) == pytest.approx((4 * math.pi) ** -0.5)
    assert kernels.heat_mass() == pytest.approx(1.0, rel=1e-9)


def test_chapman_kolmogorov_ratio_constant():
    r = [kernels.chapman_kolmogorov_ratio([0.2, 0.1, 1.0], 0.5, [0.0, 0.0, 0.0]),
         kernels.chapman_kolmogorov_ratio([-0.4, 0.3, 1.5], 0.7, [0.1, -0.2, 0.2])]
    np.testing.assert_allclose(r, math.sqrt(2 * math.pi), rtol=1e-6)
    with pytest.raises(ValueError):
        kernels.chapman_kolmogorov_ratio([0, 0, 1.0], 1.5, [0, 0, 0])


def test_ou_minimal_examples():
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(kernels.ou_minimal(0.0, x, 0.5), np.ones(7))
    assert kernels.ou_minimal(1.0, 0.0, 0.0) == pytest.approx(math.e)


def test_ou_minimal_pde_residual(rng):
    ou = get_model("ou")
    z = np.column_stack([rng.uniform(-2, 2, 100), rng.uniform(-1, 1, 100)])
    for lam in (-1.0, 0.5, 1.0):
        f = lambda p: kernels.ou_minimal(lam, p[..., 0], p[..., 1])  # noqa: E731
        assert np.max(np.abs(kernels.pde_residual(ou, f, z) / f(z))) <= 1e-6


def test_pde_residual_of_constant(model, rng):
    z = rng.uniform(-1, 1, (10, model.dim))
    one = lambda p: np.ones(np.shape(p)[:-1])  # noqa: E731
    assert np.max(np.abs(kernels.pde_residual(model, one, z))) <= 1e-12


def test_pde_residual_heat_exponential(rng):
    heat = get_model("heat")
    u = lambda p: np.exp(p[..., 0] + p[..., -1])  # noqa: E731
    z = rng.uniform(-1, 1, (20, 3))
    assert np.max(np.abs(kernels.pde_residual(heat, u, z) / u(z))) <= 1e-6


def test_pde_residual_detects_non_solution(rng):
    heat = get_model("heat")
    u = lambda p: np.exp(p[..., 0] + 2 * p[..., -1])  # noqa: E731
    z = rng.uniform(-1, 1, (5, 3))
    np.testing.assert_allclose(kernels.pde_residual(heat, u, z) / u(z), 1.0, rtol=1e-6)


def test_kolmogorov_kernel_pde_residual():
    kol = get_model("kolmogorov")
    u = lambda p: np.exp(kernels.kolmogorov_log_kernel(1, p, np.zeros(3)))  # noqa: E731
    z = np.array([0.3, 0.1, 0.7])
    assert abs(kernels.pde_residual(kol, u, z)) <= 1e-4 * u(z)


def test_richardson_improves_residual():
    kol = get_model("kolmogorov")
    u = lambda p: np.exp(kernels.kolmogorov_log_kernel(1, p, np.zeros(3)))  # noqa: E731
    z = np.array([0.3, 0.1, 0.7])
    plain = abs(kernels.pde_residual(kol, u, z, richardson=False))
    assert abs(kernels.pde_residual(kol, u, z)) < plain / 10


def test_kernel_invariance_examples():
    z, zeta = np.array([0.0, 0.0, 1.0]), np.zeros(3)
    assert kernels.kernel_invariance_residual(1, np.zeros(3), z, zeta, radii=(1.0,)) == 0.0
    assert kernels.kernel_invariance_residual(1, [1, 2, 3], z, zeta) <= 1e-10
    assert kernels.kernel_invariance_residual(1, np.zeros(3), z, zeta, radii=(2.0,)) <= 1e-10
    with pytest.raises(ValueError):
        kernels.kernel_invariance_residual(1, np.zeros(3), [0, 0, -1.0], zeta)


@settings(max_examples=50, deadline=None)
@given(g=st.lists(st.floats(-3, 3), min_size=3, max_size=3), r=st.floats(0.3, 3.0),
       x=st.floats(-2, 2), y=st.floats(-2, 2), t=st.floats(0.1, 3))
def test_kernel_invariance_property(g, r, x, y, t):
    assert kernels.kernel_invariance_residual(1, g, [x, y, t], np.zeros(3), radii=(r,)) <= 1e-10


def test_martin_quotient_at_base_point():
    seq = MartinSequence.exponential([0.2], [0.5])
    for k in (1, 10, 100):
        assert kernels.martin_quotient(seq, k, [0, 0, 0]) == pytest.approx(1.0, rel=1e-14)


def test_martin_escaping_family_dies():
    seq = MartinSequence.escaping([1.0])
    assert kernels.martin_quotient(seq, 200, [0.5, 0, -0.5]) <= 1e-8


def test_martin_exponential_family_limit():
    seq = MartinSequence.exponential([0.0], [1 / 3])
    z = np.array([1.0, 5.0, -1.0])
    predicted = kernels.martin_limit_predicted([0.0], [1 / 3])(z)
    assert predicted == pytest.approx(1.0)
    errs = [abs(kernels.martin_quotient(seq, k, z) - predicted) for k in (100, 1000, 10_000)]
    assert errs[1] <= 2e-2
    assert errs[0] > errs[1] > errs[2]
    assert kernels.convergence_rate([100, 1000, 10_000], errs) < -0.8


def test_martin_bounded_tau_exact_zeros():
    seq = MartinSequence.bounded_tau([1.0], tau_limit=-1.0)
    for k in (5, 50, 500):
        assert kernels.martin_quotient(seq, k, [0.3, 0.2, -1.5]) == 0.0


def test_martin_sequence_validation():
    with pytest.raises(ValueError):
        MartinSequence.escaping([1.0], tau=0.5)(3)


def test_martin_limit_predicted_cases():
    z = np.array([0.7, -2.0, 0.4])
    assert kernels.martin_limit_predicted([0.0], [0.0])(z) == 1.0
    w = 0.6
    assert kernels.martin_limit_predicted([w], [w])(z) == pytest.approx(kernels.kolmogorov_extremal([w])(z))


def test_normalized_sequence_cases():
    w1, w2 = np.array([0.3]), np.array([-0.2])
    seq = MartinSequence.exponential(w1, w2)
    for k in (1, 7, 1000):
        xt, et, pred = kernels.normalized_sequence(seq, k)
        np.testing.assert_allclose([xt, et, pred], [2 * w1, w2, 3 * w2 - 2 * w1], rtol=1e-14)
    xt, et, pred = kernels.normalized_sequence(MartinSequence.escaping([0.0]), 5)
    np.testing.assert_array_equal(np.concatenate([xt, et, pred]), 0.0)
    xt, et, pred = kernels.normalized_sequence(MartinSequence.escaping([0.5]), 40)
    np.testing.assert_allclose(pred, [-20.0])


def test_convergence_rate_slope():
    ks = [10, 100, 1000]
    assert kernels.convergence_rate(ks, [1e-1, 1e-2, 1e-3]) == pytest.approx(-1.0)
