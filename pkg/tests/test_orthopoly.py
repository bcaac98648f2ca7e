import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermeval
from scipy.integrate import quad
from scipy.special import gammaln

from betalab.errors import DomainError
from betalab.orthopoly import (STRUCTURAL_TOLERANCES, differentiation_matrix, eps_psi, recurrence,
                               reproducing_kernel, stojanovic_identity, structural_report,
                               t_matrix_logdet, tracy_widom_S)
from betalab.potential import GAUSSIAN

from conftest import QUARTIC, SEXTIC, workspace

G, Q = tuple(GAUSSIAN.tolist()), tuple(QUARTIC.tolist())


def test_gaussian_recurrence_is_hermite():
    # weight exp(-n x^2 / 2): off-diagonal a_k = sqrt(k / n), diagonal b_k = 0
    n = 10
    rec = recurrence(GAUSSIAN, n, K=30)
    assert np.allclose(rec.b[:30], 0, atol=1e-13)
    assert np.allclose(rec.a[1:30], np.sqrt(np.arange(1, 30) / n), rtol=1e-12)


def test_gaussian_psi_matches_hermite_functions():
    n, k = 6, 5
    rec = recurrence(GAUSSIAN, n, K=12)
    x = np.linspace(-2.5, 2.5, 11)
    c = np.zeros(k + 1)
    c[k] = 1
    # orthonormal w.r.t. exp(-n x^2/2): He_k(sqrt(n) x) / sqrt(k! sqrt(2 pi / n)), times exp(-n x^2 / 4)
    want = hermeval(np.sqrt(n) * x, c) * np.exp(-n * x * x / 4 - 0.5 * (gammaln(k + 1) + 0.5 * np.log(2 * np.pi / n)))
    got = rec.psi(x, k + 1)[k]
    assert np.allclose(np.abs(got), np.abs(want), atol=1e-12)


@pytest.mark.parametrize("coeffs", [G, Q, tuple(SEXTIC.tolist())], ids=["gauss", "quartic", "sextic"])
@pytest.mark.parametrize("n", [8, 20])
def test_structural_identities(coeffs, n):
    rep = structural_report(workspace(coeffs, n))
    for k, tol in STRUCTURAL_TOLERANCES.items():
        assert rep[k] <= tol, k
    assert rep["delta_rows_in_corner"]


def test_differentiation_matrix_band_width():
    ws = workspace(Q, 12)
    j, k = np.indices(ws.D.shape)
    assert np.all(ws.D[np.abs(j - k) >= 4] == 0)
    assert np.abs(ws.D[np.abs(j - k) == 3]).max() > 0
    with pytest.raises(DomainError):
        differentiation_matrix(ws.recurrence, ws.recurrence.K, 2)


def test_dpsi_matches_finite_differences():
    ws = workspace(Q, 12)
    x = np.linspace(-1.2, 1.2, 7)
    h = 1e-6
    fd = (ws.psi(x + h) - ws.psi(x - h)) / (2 * h)
    assert np.allclose(ws.dpsi(x)[: ws.L], fd[: ws.L], atol=1e-6)


def test_eps_psi_is_half_signed_convolution():
    ws = workspace(Q, 12)
    j, x0 = 5, 0.3
    lo, hi = ws.recurrence.window
    psi = lambda t: ws.psi(t)[j]
    direct = 0.5 * (quad(psi, lo, x0, epsabs=1e-14)[0] - quad(psi, x0, hi, epsabs=1e-14)[0])
    assert eps_psi(ws, j, x0) == pytest.approx(direct, abs=1e-12)
    with pytest.raises(DomainError):
        eps_psi(ws, ws.Lb, 0.0)


def test_gaussian_T_is_identity():
    T, logdet = t_matrix_logdet(workspace(G, 10))
    assert T.shape == (1, 1) and T[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_reproducing_kernel_symmetry_and_trace():
    ws = workspace(Q, 12)
    K = reproducing_kernel(ws)
    x, w = ws.grid()
    assert np.sum(w * K(x, x)) == pytest.approx(12.0, abs=1e-10)
    a, b = np.array([0.1, -0.7]), np.array([0.4, 0.9])
    assert np.allclose(K(a, b), K(b, a), atol=1e-13)


@pytest.mark.parametrize("beta", [1, 4])
@pytest.mark.parametrize("coeffs", [G, Q], ids=["gauss", "quartic"])
def test_tracy_widom_forms_agree(beta, coeffs):
    ws = workspace(coeffs, 12)
    lam, mu = np.meshgrid(np.linspace(-1.3, 1.3, 5), np.linspace(-1.1, 1.2, 5))
    a = tracy_widom_S(ws, beta, "dgkv")(lam.ravel(), mu.ravel())
    b = tracy_widom_S(ws, beta, "explicit")(lam.ravel(), mu.ravel())
    assert np.allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("beta", [1, 4])
def test_tracy_widom_trace(beta):
    # both kernels are built from n levels and integrate to n on the diagonal
    ws = workspace(Q, 12)
    S = tracy_widom_S(ws, beta)
    x, w = ws.grid()
    assert np.sum(w * S(x, x)) == pytest.approx(12.0, abs=1e-8)


def test_tracy_widom_requires_even_n_and_known_form():
    with pytest.raises(DomainError):
        tracy_widom_S(workspace(Q, 11), 1)
    with pytest.raises(DomainError):
        tracy_widom_S(workspace(Q, 12), 1, form="other")


def test_stojanovic_gaussian():
    rep = stojanovic_identity(GAUSSIAN, 2)
    assert rep.relative_error < 1e-6
    assert rep.heine_error < 1e-10 and rep.det_M_error < 1e-10


@pytest.mark.slow
def test_stojanovic_quartic():
    rep = stojanovic_identity(QUARTIC, 4)
    assert rep.relative_error < 1e-4
    assert rep.heine_error < 1e-8


def test_stojanovic_rejects_odd_n():
    with pytest.raises(DomainError):
        stojanovic_identity(GAUSSIAN, 3)
