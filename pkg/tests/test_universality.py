import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betalab.errors import DomainError
from betalab.universality import (K_inf, K_inf_integral, K_inf_prime, LimitKernel, bulk_deviation,
                                  conjugate, rescaled_matrix_kernel, sine_limit, square_grid)
from betalab.potential import GAUSSIAN

from conftest import QUARTIC, workspace

G, Q = tuple(GAUSSIAN.tolist()), tuple(QUARTIC.tolist())


def test_sine_kernel_values():
    assert K_inf(0.0) == 1.0
    assert K_inf(np.array([1.0, 2.0, -3.0])) == pytest.approx([0, 0, 0], abs=1e-15)
    assert K_inf(0.5) == pytest.approx(2 / np.pi)


@settings(max_examples=50, deadline=None)
@given(st.floats(-6, 6))
def test_derivative_and_integral_consistent(t):
    h = 1e-5
    assert K_inf_prime(t) == pytest.approx((K_inf(t + h) - K_inf(t - h)) / (2 * h), abs=1e-8)
    assert K_inf_integral(t + h) - K_inf_integral(t - h) == pytest.approx(2 * h * K_inf(t), abs=1e-12)


def test_limit_kernel_entries():
    k1 = sine_limit(1, 0.7, 0.2)
    k4 = LimitKernel(4)(0.7, 0.2)
    assert k1.shape == (2, 2)
    assert k1[0, 0] == pytest.approx(K_inf(0.5)) and k1[1, 1] == pytest.approx(K_inf(-0.5))
    assert k1[1, 0] - k4[1, 0] == pytest.approx(-0.5)
    assert k1[0, 1] == k4[0, 1]
    assert sine_limit(2, 0.7, 0.2) == pytest.approx(K_inf(0.5))
    with pytest.raises(DomainError):
        sine_limit(3, 0, 0)


def test_conjugation_roundtrip():
    A = np.arange(4.0).reshape(2, 2) + 1
    B = conjugate(A, 3.0)
    assert B[0, 0] == A[0, 0] and B[1, 1] == A[1, 1]
    assert B[0, 1] == pytest.approx(A[0, 1] / 3) and B[1, 0] == pytest.approx(3 * A[1, 0])
    assert np.allclose(conjugate(B, 1 / 3.0), A)


def test_square_grid():
    xi, eta = square_grid(2.0, 5)
    assert xi.size == 25 and xi.min() == -2 and eta.max() == 2


@pytest.mark.parametrize("beta", [1, 4])
def test_eps_crosscheck_and_exact_derivative(beta):
    ws = workspace(Q, 20)
    xi, eta = square_grid(1.5, 5)
    fd = rescaled_matrix_kernel(ws, beta, 0.1, xi, eta)
    ex = rescaled_matrix_kernel(ws, beta, 0.1, xi, eta, derivative="exact")
    assert fd.eps_crosscheck < 1e-10
    assert np.abs(fd.values - ex.values).max() < 1e-7


def test_beta_two_near_limit():
    ws = workspace(G, 40)
    xi, eta = square_grid()
    assert rescaled_matrix_kernel(ws, 2, 0.0, xi, eta).deviation < 0.02


def test_edge_and_method_rejections():
    ws = workspace(G, 20)
    with pytest.raises(DomainError):
        rescaled_matrix_kernel(ws, 2, 1.9, [0.0], [0.0])
    with pytest.raises(DomainError):
        rescaled_matrix_kernel(ws, 1, 0.0, [0.0], [0.0], derivative="spline")
    with pytest.raises(DomainError):
        bulk_deviation(GAUSSIAN, 2, ns=(10, 20))


def test_bulk_deviation_table():
    tab = bulk_deviation(GAUSSIAN, 2, ns=(10, 20, 40), size=5)
    assert tab.decreasing and not tab.flagged and tab.exponent < 0
    assert tab.as_dict()["n"] == [10, 20, 40]
