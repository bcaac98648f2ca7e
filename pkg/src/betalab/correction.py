"""First-order (O(1)) correction to linear statistics and the log-partition expansion.

The correction to E N_n[f] - n int f rho is (2/beta - 1) times

    I[f] = -(1/(2 pi i)^2) oint_{L_2d} f(z)/X^{1/2}(z) oint_{L_d} g'(zeta) / (P(zeta)(z - zeta)) dzeta dz

with both contours counterclockwise and X^{1/2} ~ z at infinity.  The
leading minus sign is the orientation convention fixed by the Gaussian
identity E sum lam_i^2 = (n - 1) + 2/beta (see ``ORIENTATION_SIGN``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .contour import build_contour
from .equilibrium import (EquilibriumMeasure, default_distance, distance_to_cut, equilibrium_measure,
                          sqrt_X)
from .errors import AccuracyError, ContourError, DomainError, PathError
from .potential import GAUSSIAN, Polynomial, eval_potential

# Multiplies the raw counterclockwise double integral; pinned by the
# Gaussian f = x^2 calibration (predicted shift must be +(2/beta - 1)).
ORIENTATION_SIGN = -1.0


@dataclass(frozen=True)
class CorrectionReport:
    integral_value: float
    prefactor: float
    predicted_shift: float
    beta: float
    d: float
    N: int
    imag_residue: float

    def as_dict(self):
        return asdict(self)


def _as_standard_callable(eq: EquilibriumMeasure, f):
    if isinstance(f, Polynomial):
        fs = f.compose_affine(eq.amap.shift, 1.0 / eq.amap.scale)
        return lambda z: eval_potential(fs, z)
    if callable(f):
        return lambda z: f(eq.amap.inverse(z))
    raise DomainError("f must be a Polynomial or a callable")


def raw_double_integral(f_std, P_fn, dg_fn, d: float, N: int) -> complex:
    """(1/(2 pi i)^2) oint_{L_2d} f/X^{1/2} oint_{L_d} g' / (P (z - zeta)), both counterclockwise."""
    outer = build_contour(2.0 * d, N)
    inner = build_contour(d, N)
    z, wz = outer.nodes, outer.weights
    zeta, wzeta = inner.nodes, inner.weights
    inner_vals = wzeta * dg_fn(zeta) / P_fn(zeta)
    h = (1.0 / (z[:, None] - zeta[None, :])) @ inner_vals
    return np.sum(wz * f_std(z) / sqrt_X(z) * h) / (2j * np.pi) ** 2


def _converged_integral(f_std, P_fn, dg_fn, d, N, tol, max_N):
    prev = raw_double_integral(f_std, P_fn, dg_fn, d, N)
    while True:
        N2 = 2 * N
        if N2 > max_N:
            raise AccuracyError(f"contour quadrature not converged at N = {N}")
        cur = raw_double_integral(f_std, P_fn, dg_fn, d, N2)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur, N2
        prev, N = cur, N2


def first_order_correction(eq: EquilibriumMeasure, f, beta: float, d: float | None = None,
                           N: int = 256, tol: float = 1e-8, max_N: int = 8192) -> CorrectionReport:
    """Predicted O(1) shift of E N_n[f] from n int f rho.

    ``f`` is a :class:`Polynomial` or a callable (vectorized over complex
    arrays) in the original variable of ``eq.potential``; it must be
    analytic within distance 2d of the support in the standard coordinate.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    if d is None:
        d = default_distance(eq)
    if not d < eq.d_max / 2.0:
        raise ContourError(f"d = {d} is not below d_max/2 = {eq.d_max / 2.0}")
    f_std = _as_standard_callable(eq, f)
    raw, N_used = _converged_integral(f_std, eq.P_eval, eq.stieltjes_derivative, d, N, tol, max_N)
    value = ORIENTATION_SIGN * raw.real
    prefactor = 2.0 / beta - 1.0
    return CorrectionReport(integral_value=float(value), prefactor=prefactor,
                            predicted_shift=float(prefactor * value), beta=float(beta),
                            d=float(d), N=int(N_used), imag_residue=float(abs(raw.imag)))


# ---------------------------------------------------------------------------
# partition function


def selberg_log_q0(n: int, beta: float) -> float:
    """log of the Gaussian (V = x^2/2) partition function by the Selberg formula."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not beta > 0:
        raise DomainError("beta must be positive")
    j = np.arange(1, n + 1)
    return float(gammaln(n + 1)
                 - (beta * n * (n - 1) / 4.0 + n / 2.0) * np.log(n * beta / 2.0)
                 + (n / 2.0) * np.log(2.0 * np.pi)
                 + np.sum(gammaln(beta * j / 2.0) - gammaln(beta / 2.0)))


def _gaussian_dg(z):
    return 0.5 * (1.0 - z / sqrt_X(z))


@dataclass(frozen=True)
class LogQExpansion:
    n: int
    beta: float
    log_q0: float
    energy_term: float
    gaussian_term: float
    correction_term: float
    jacobian_term: float
    total: float
    J: float
    energy: float
    d: float

    def as_dict(self):
        return asdict(self)


def interpolation_integral(eq: EquilibriumMeasure, t: float, d: float, N: int = 256,
                           tol: float = 1e-9, max_N: int = 4096) -> complex:
    """Raw counterclockwise double integral with f = V - z^2/2 along V_t (standard coordinate)."""
    V = eq.standard
    f = V - GAUSSIAN
    f_fn = lambda z: eval_potential(f, z)
    P_fn = lambda z: t * eq.P_eval(z) + (1.0 - t)
    dg_fn = lambda z: t * eq.stieltjes_derivative(z) + (1.0 - t) * _gaussian_dg(z)
    val, _ = _converged_integral(f_fn, P_fn, dg_fn, d, N, tol, max_N)
    return val


def path_zero_radius(eq: EquilibriumMeasure, ts) -> float:
    """min over t of the zero-free radius of P_t = t P + 1 - t."""
    worst = np.inf
    for t in ts:
        c = t * np.asarray(eq.P.coeffs, dtype=float)
        c = c.copy()
        c[0] += 1.0 - t
        nz = np.flatnonzero(c)
        if nz.size == 0 or nz[-1] == 0:
            continue
        c = c[: nz[-1] + 1]
        roots = np.roots(c[::-1])
        if roots.size:
            worst = min(worst, float(np.min(distance_to_cut(roots)) / 2.0))
    return worst


def logq_expansion(eq: EquilibriumMeasure, n: int, beta: float, d: float | None = None,
                   n_t: int = 16, N: int = 256) -> LogQExpansion:
    """Large-n expansion of log Q_{n,beta} through the O(n) term.

    Applied to the potential in its standard coordinate (support [-2, 2]),
    where V_t = t V + (1-t) x^2/2 keeps the support fixed:

        log Q = log Q0 + n^2 (beta/2) E_V + n^2 (3/8) beta + n (1 - beta/2) J,

    J = int_0^1 (raw ccw double integral along V_t) dt by ``n_t``-point
    Gauss-Legendre.  The exact Jacobian ``(n + beta n(n-1)/2) log s`` of
    the affine change of variable (s = half-width / 2) is added so the
    result is log Q for the potential as given.
    """
    if n < 1 or not beta > 0:
        raise DomainError("need n >= 1 and beta > 0")
    tn, tw = np.polynomial.legendre.leggauss(n_t)
    ts = 0.5 * (tn + 1.0)
    tw = 0.5 * tw
    rmin = path_zero_radius(eq, np.concatenate([ts, [0.0, 1.0]]))
    if d is None:
        d = float(min(0.5, 0.4 * rmin))
    if not (rmin > 0 and d < rmin / 2.0):
        raise PathError(f"d = {d} not admissible along V_t (min zero-free radius {rmin})")

    log_q0 = selberg_log_q0(n, beta)
    std_energy = eq.energy() + np.log(eq.amap.scale)
    energy_term = n * n * beta / 2.0 * std_energy
    gaussian_term = n * n * 3.0 * beta / 8.0
    if eq.standard == GAUSSIAN:
        J = 0.0
    else:
        J = float(np.real(sum(w * interpolation_integral(eq, t, d, N) for t, w in zip(ts, tw))))
    correction_term = n * (1.0 - beta / 2.0) * J
    s = 1.0 / eq.amap.scale
    jacobian_term = (n + beta * n * (n - 1) / 2.0) * np.log(s)
    total = log_q0 + energy_term + gaussian_term + correction_term + jacobian_term
    return LogQExpansion(n=n, beta=float(beta), log_q0=log_q0, energy_term=float(energy_term),
                         gaussian_term=float(gaussian_term), correction_term=float(correction_term),
                         jacobian_term=float(jacobian_term), total=float(total), J=J,
                         energy=float(eq.energy()), d=float(d))


def logq_expansion_for(p: Polynomial, n: int, beta: float, **kw) -> LogQExpansion:
    return logq_expansion(equilibrium_measure(p), n, beta, **kw)
