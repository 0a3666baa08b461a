import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from intflow.errors import SingularInputError, UnsupportedDimensionError
from intflow.kernels import (
    coulomb_kernel,
    coulomb_kernel_2d,
    greens_constant,
    greens_function,
    potential,
    rbf_kernel,
    rbf_kernel_derivatives,
)

from conftest import random_rotation
from oracles import central_gradient, rel_err, sphere_area

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def vectors(n):
    return arrays(np.float64, n, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_greens_3d_matches_inverse_square():
    np.testing.assert_allclose(greens_function([1.0, 0, 0]), [1 / (4 * math.pi), 0, 0], rtol=1e-15)
    assert greens_function([1.0, 0, 0])[0] == pytest.approx(0.0795775, abs=1e-7)


def test_greens_2d():
    np.testing.assert_allclose(greens_function([0.0, 2.0]), [0, 1 / (4 * math.pi)], rtol=1e-15)


@pytest.mark.parametrize("n", range(2, 9))
def test_constant_is_inverse_sphere_area(n):
    assert greens_constant(n) == pytest.approx(1 / sphere_area(n), rel=1e-14)


def test_greens_rejects_origin_and_nan():
    with pytest.raises(SingularInputError):
        greens_function([0.0, 0.0])
    with pytest.raises(SingularInputError):
        greens_function([np.nan, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6).flatmap(vectors))
def test_greens_odd(x):
    assert np.array_equal(greens_function(-x), -greens_function(x))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6).flatmap(vectors), st.floats(1e-3, 1e3))
def test_greens_scaling_law(x, lam):
    n = x.size
    np.testing.assert_allclose(greens_function(lam * x), lam ** (1 - n) * greens_function(x), rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_greens_rotation_equivariance(rng, n):
    for _ in range(20):
        R = random_rotation(rng, n)
        x = rng.standard_normal(n)
        np.testing.assert_allclose(greens_function(R @ x), R @ greens_function(x), rtol=1e-12, atol=0)


def test_coulomb_values():
    assert coulomb_kernel([1.0, 0, 0], [0.0, 0, 0]) == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert coulomb_kernel([0, 1.0, 0, 0], [0.0, 0, 0, 0]) == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)
    assert 1 / (4 * math.pi**2) == pytest.approx(0.0253303, abs=1e-7)


def test_coulomb_translation_invariance(rng):
    for n in (3, 4, 5):
        x, z, c = rng.standard_normal((3, n))
        assert coulomb_kernel(x + c, z + c) == pytest.approx(coulomb_kernel(x, z), rel=1e-13)


def test_coulomb_errors():
    with pytest.raises(UnsupportedDimensionError):
        coulomb_kernel([1.0, 0], [0.0, 0])
    with pytest.raises(SingularInputError):
        coulomb_kernel([1.0, 2, 3], [1.0, 2, 3])
    with pytest.raises(SingularInputError):
        coulomb_kernel_2d([1.0, 2], [1.0, 2])


def test_coulomb_2d_values():
    assert coulomb_kernel_2d([1.0, 0], [0.0, 0]) == 0.0
    assert coulomb_kernel_2d([2.0, 0], [0.0, 0]) == pytest.approx(-math.log(2) / (2 * math.pi), rel=1e-15)
    assert coulomb_kernel_2d([2.0, 0], [0.0, 0]) == pytest.approx(-0.110318, abs=1e-6)


def test_coulomb_2d_gradient_at_unit_diagonal():
    # field at x = (1, 1) of the charge at the origin: gradient in the source coordinate
    h = 1e-6
    fd = central_gradient(lambda q: coulomb_kernel_2d([1.0, 1.0], q), [0.0, 0.0], h)
    assert rel_err(fd, list(greens_function([1.0, 1.0]))) < 1e-6


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_potential_gradient_identity(rng, n):
    for _ in range(10):
        x, z = rng.standard_normal((2, n))
        h = 1e-5 * np.linalg.norm(x - z)
        g = list(greens_function(x - z))
        fd_z = central_gradient(lambda q: potential(x, q), list(z), h)
        fd_x = central_gradient(lambda q: potential(q, z), list(x), h)
        assert rel_err(fd_z, g) < 1e-5
        assert rel_err([-c for c in fd_x], g) < 1e-5


def test_rbf_values():
    x = np.array([0.3, -1.2, 2.0])
    assert rbf_kernel(x, x, 0.7) == 1.0
    y = x + np.array([0.7 * math.sqrt(2), 0, 0])
    assert rbf_kernel(x, y, 0.7) == pytest.approx(math.exp(-1), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=finite),
                                                     arrays(np.float64, n, elements=finite))),
       st.floats(0.05, 20))
def test_rbf_symmetric_and_bounded(xy, sigma):
    x, y = xy
    k = rbf_kernel(x, y, sigma)
    assert k == rbf_kernel(y, x, sigma)
    assert 0 <= k <= 1


def test_rbf_derivatives_at_coincident_points():
    gx, gy, tr = rbf_kernel_derivatives([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.5)
    assert not gx.any() and not gy.any()
    assert tr == pytest.approx(3 / 0.25, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_rbf_derivatives_match_finite_differences(rng, n):
    h = 1e-5
    for _ in range(10):
        x, y = 0.6 * rng.standard_normal((2, n))
        sigma = rng.uniform(0.5, 2.0)
        gx, gy, tr = rbf_kernel_derivatives(x, y, sigma)
        assert np.array_equal(gx, -gy)
        fdx = central_gradient(lambda p: rbf_kernel(p, y, sigma), list(x), h)
        fdy = central_gradient(lambda p: rbf_kernel(x, p, sigma), list(y), h)
        assert rel_err(list(gx), fdx) < 1e-6
        assert rel_err(list(gy), fdy) < 1e-6
        # trace of d/dx d/dy k: central differences of the analytic y-gradient in x
        fd_tr = 0.0
        for d in range(n):
            e = np.zeros(n)
            e[d] = h
            fd_tr += (rbf_kernel_derivatives(x + e, y, sigma)[1][d]
                      - rbf_kernel_derivatives(x - e, y, sigma)[1][d]) / (2 * h)
        assert fd_tr == pytest.approx(tr, rel=1e-6, abs=1e-9)
