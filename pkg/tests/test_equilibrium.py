import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from betalab.equilibrium import (compute_P, density, endpoint_residuals, energy, equilibrium_measure,
                                 from_standard_potential, solve_support, stieltjes,
                                 stieltjes_quadrature, validate)
from betalab.errors import ConditionViolation, DomainError, InconsistencyError
from betalab.potential import GAUSSIAN, Polynomial, PotentialFamily, eval_potential, interpolate

from conftest import DOUBLE_WELL, QUARTIC, SEXTIC, SHIFTED, measure

B_QUARTIC = (16.0 / 3.0) ** 0.25    # frozen oracle: (3 pi / 8) b^4 = 2 pi


def test_support_examples():
    assert np.allclose(solve_support(GAUSSIAN), (-2, 2), atol=1e-12)
    assert np.allclose(solve_support(QUARTIC), (-B_QUARTIC, B_QUARTIC), atol=1e-12)
    assert np.allclose(solve_support(SHIFTED), (-2.1, 1.9), atol=1e-12)


def test_endpoint_residuals_small():
    for V in (GAUSSIAN, QUARTIC, SEXTIC, SHIFTED):
        assert np.abs(endpoint_residuals(V, *solve_support(V))).max() < 1e-10


def test_support_rejects_unconfined():
    with pytest.raises(DomainError):
        solve_support(Polynomial([0, 0, -1]))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(0.2, 2), st.one_of(st.just(0.0), st.floats(0.01, 0.5)))
def test_support_affine_invariance(shift, c2, c4):
    V = Polynomial([0.0, shift, c2, 0.0, c4])
    eq = equilibrium_measure(V)
    assert np.allclose(solve_support(eq.standard), (-2, 2), atol=1e-10)


def test_P_examples(gaussian_eq, quartic_eq):
    assert np.allclose(gaussian_eq.P.coeffs, [1.0], atol=1e-12)
    P = quartic_eq.P
    assert P.degree == 2 and P(0.0) > 0
    assert P.is_even(1e-12)
    assert gaussian_eq.normalization * np.pi == pytest.approx(1.0, abs=1e-12)


def test_P_quartic_matches_closed_form(quartic_eq):
    # one-cut quartic: rho(lam) = (lam^2 + b^2/2) sqrt(b^2 - lam^2) / (2 pi)
    b = B_QUARTIC
    lam = np.linspace(-0.99 * b, 0.99 * b, 41)
    want = (lam ** 2 + b * b / 2) * np.sqrt(b * b - lam ** 2) / (2 * np.pi)
    assert np.allclose(quartic_eq.density_original(lam), want, atol=1e-12)


def test_P_rejects_wrong_support():
    with pytest.raises(InconsistencyError):
        compute_P(Polynomial([0, 0, 1.0]))


def test_P_even_iff_V_even():
    assert measure(tuple(SEXTIC.tolist())).P.is_even(1e-12)
    assert not measure((0.0, 0.3, 0.5, 0.1, 0.25)).P.is_even(1e-6)


def test_density_examples(gaussian_eq):
    assert density(gaussian_eq, 0.0) == pytest.approx(1 / np.pi)
    assert density(gaussian_eq, 2.0) == 0.0 and density(gaussian_eq, -2.0) == 0.0
    with pytest.raises(DomainError):
        density(gaussian_eq, 2.5)


@pytest.mark.parametrize("V", [GAUSSIAN, QUARTIC, SEXTIC, SHIFTED], ids=["gauss", "quartic", "sextic", "shifted"])
def test_density_positive_and_normalized(V):
    eq = measure(tuple(V.tolist()))
    x = np.linspace(-2, 2, 4096)
    assert density(eq, x).min() >= 0
    mass = quad(lambda t: density(eq, t), -2, 2, epsabs=1e-13, epsrel=1e-13)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_stieltjes_examples(gaussian_eq, quartic_eq):
    assert stieltjes(gaussian_eq, 3.0).real == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-14)
    for eq in (gaussian_eq, quartic_eq):
        assert (1e6 * stieltjes(eq, 1e6)).real == pytest.approx(1.0, abs=1e-6)
    assert stieltjes(gaussian_eq, 1e-6j).imag == pytest.approx(-1.0, abs=1e-5)
    with pytest.raises(DomainError):
        stieltjes(gaussian_eq, 0.5)


def test_stieltjes_imag_part_is_density(quartic_eq):
    x = np.linspace(-1.8, 1.8, 9)
    g = stieltjes(quartic_eq, x + 1e-9j)
    assert np.allclose(g.imag, -np.pi * density(quartic_eq, x), atol=1e-7)


def test_stieltjes_closed_form_vs_quadrature(quartic_eq):
    z = np.array([3.0, 0.5 + 0.7j, -1.0 - 0.3j])
    assert np.allclose(stieltjes(quartic_eq, z), stieltjes_quadrature(quartic_eq, z), atol=1e-12)


def _energy_oracle(eq):
    """E = (C - int V rho) / 2 with C = 2 int log|x0 - y| rho(y) dy - V(x0) on the support."""
    a, b = eq.support
    x0 = 0.3 * a + 0.7 * b
    rho = eq.density_original
    logpot = sum(quad(lambda y: np.log(abs(x0 - y)) * rho(y), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
                 for lo, hi in ((a, x0), (x0, b)))
    C = 2 * logpot - eval_potential(eq.potential, x0)
    vint = quad(lambda y: eval_potential(eq.potential, y) * rho(y), a, b, epsabs=1e-13, epsrel=1e-13)[0]
    return 0.5 * (C - vint)


def test_energy_examples(gaussian_eq, quartic_eq):
    assert energy(gaussian_eq) == pytest.approx(-0.75, abs=1e-13)
    for beta in (1, 2, 4):
        assert -0.5 * beta * energy(gaussian_eq) == pytest.approx(3 * beta / 8)
    assert energy(quartic_eq, nodes=128) == pytest.approx(energy(quartic_eq, nodes=512), abs=1e-8)


@pytest.mark.parametrize("V", [QUARTIC, SEXTIC, SHIFTED], ids=["quartic", "sextic", "shifted"])
def test_energy_matches_euler_lagrange_oracle(V):
    eq = measure(tuple(V.tolist()))
    assert energy(eq) == pytest.approx(_energy_oracle(eq), abs=1e-8)


def test_validate_examples(gaussian_eq, quartic_eq):
    rep = validate(gaussian_eq)
    assert rep.ok and np.isinf(rep.d_max)
    rep = validate(quartic_eq)
    assert rep.ok and rep.identity_residual < 1e-8
    bad = validate(equilibrium_measure(DOUBLE_WELL))
    assert not bad.ok and any(v.startswith("C2") for v in bad.violations)
    with pytest.raises(ConditionViolation):
        bad.raise_if_invalid()


def test_quartic_d_max(quartic_eq):
    # P(x) proportional to x^2 + 2: zeros at +-i sqrt(2)
    assert quartic_eq.d_max == pytest.approx(np.sqrt(2) / 2, abs=1e-10)


@pytest.mark.parametrize("t", [0.0, 0.3, 0.7, 1.0])
def test_interpolated_density_is_convex_combination(quartic_eq, t):
    Vt = interpolate(PotentialFamily(quartic_eq.standard), t)
    eqt = from_standard_potential(Vt)
    x = np.linspace(-2, 2, 101)
    rho0 = np.sqrt(4 - x * x) / (2 * np.pi)
    assert np.allclose(density(eqt, x), t * density(quartic_eq, x) + (1 - t) * rho0, atol=1e-8)
