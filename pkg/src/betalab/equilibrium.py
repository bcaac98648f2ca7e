"""One-cut equilibrium measures of polynomial potentials.

Everything is computed in the standard coordinate ``x`` in which the
support is [-2, 2]; the affine map back to the original variable is kept on
the measure.  In that coordinate

    rho(x) = P(x) sqrt(4 - x^2) / (2 pi),
    g(z)   = (V'(z) - P(z) X^{1/2}(z)) / 2,     X(z) = z^2 - 4,

with the branch X^{1/2}(z) ~ z at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly

from .contour import build_contour
from .errors import ConditionViolation, DomainError, InconsistencyError, NotOneCutError
from .potential import AffineMap, Polynomial, check_growth, eval_potential, rescale_to_standard

DEFAULT_NODES = 256
FAR_FIELD = 8.0         # |z| beyond which g is summed from its moment series
N_MOMENTS = 64


def sqrt_X(z):
    """Branch of (z^2 - 4)^{1/2} cut along [-2, 2], ~ z at infinity."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - 2.0) * np.sqrt(z + 2.0)


def chebyshev_nodes(N: int) -> tuple[np.ndarray, np.ndarray]:
    """First-kind Gauss-Chebyshev angles and points ``x = 2 cos(theta)`` on [-2, 2].

    ``mean(f(x))`` equals ``(1/pi) int_{-2}^{2} f(x) / sqrt(4 - x^2) dx``.
    """
    theta = (np.arange(N) + 0.5) * np.pi / N
    return theta, 2.0 * np.cos(theta)


def semicircle_rule(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with ``sum(w f(x)) = int_{-2}^{2} f(x) sqrt(4-x^2) dx`` (second kind)."""
    theta = np.arange(1, N + 1) * np.pi / (N + 1)
    x = 2.0 * np.cos(theta)
    w = 4.0 * np.pi / (N + 1) * np.sin(theta) ** 2
    return x, w


# ---------------------------------------------------------------------------
# endpoint solver


def _endpoint_residual(dV: np.ndarray, d2V: np.ndarray, c: float, s: float, cos_t: np.ndarray):
    lam = c + 2.0 * s * cos_t
    v1 = npoly.polyval(lam, dV)
    v2 = npoly.polyval(lam, d2V)
    F = np.array([v1.mean(), (2.0 * s * cos_t * v1).mean() - 2.0])
    J = np.array([
        [v2.mean(), (2.0 * cos_t * v2).mean()],
        [(2.0 * s * cos_t * v2).mean(), (2.0 * cos_t * v1 + 4.0 * s * cos_t**2 * v2).mean()],
    ])
    return F, J


def _newton(dV, d2V, c, s, cos_t, tol, maxiter, damping):
    F, J = _endpoint_residual(dV, d2V, c, s, cos_t)
    for _ in range(maxiter):
        res = np.abs(F).max()
        if res < tol:
            return c, s, res
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        alpha = 1.0
        while alpha > 1e-8:
            cn, sn = c + alpha * step[0], s + alpha * step[1]
            if sn > 0:
                Fn, Jn = _endpoint_residual(dV, d2V, cn, sn, cos_t)
                if np.abs(Fn).max() < res:
                    break
            alpha *= damping
        else:
            return None
        c, s, F, J = cn, sn, Fn, Jn
    res = np.abs(F).max()
    return (c, s, res) if res < tol else None


def solve_support(p: Polynomial, tol: float = 1e-13, maxiter: int = 200,
                  damping: float = 0.5) -> tuple[float, float]:
    """Endpoints [a, b] of the one-cut equilibrium support of ``p``.

    Solves
        int_a^b V'(x) / sqrt((x-a)(b-x)) dx = 0,
        int_a^b x V'(x) / sqrt((x-a)(b-x)) dx = 2 pi
    by damped Newton in (centre, quarter-width).  The integrals are exact
    Gauss-Chebyshev sums because the integrands are polynomial in cos(theta).

    >>> solve_support(Polynomial([0, 0, 0.5]))
    (-2.0, 2.0)
    """
    growth = check_growth(p)
    if not growth:
        raise DomainError(f"potential is not confining: {growth.witness}")
    dV = npoly.polyder(p.coeffs)
    d2V = npoly.polyder(p.coeffs, 2)
    _, cos_t = chebyshev_nodes(2 * p.degree + 8)
    cos_t = cos_t / 2.0

    crit = np.roots(dV[::-1]) if dV.size > 1 else np.array([0.0])
    real = crit[np.abs(crit.imag) < 1e-9].real
    if real.size == 0:
        real = np.array([0.0])
    c0 = 0.5 * (real.min() + real.max())
    # quarter-width from the pure leading monomial, which is exact for x^2m
    d = p.degree
    lead = p.leading
    s_mono = (2.0 / (lead * d * comb(d, d // 2) / 2**d)) ** (1.0 / d) / 2.0
    s0 = max(0.25 * (real.max() - real.min()), s_mono)

    tried = []
    for fac in (1.0, 2.0, 0.5, 4.0, 0.25, 8.0):
        out = _newton(dV, d2V, c0, s0 * fac, cos_t, tol, maxiter, damping)
        tried.append(s0 * fac)
        if out is not None:
            c, s, _ = out
            a, b = c - 2.0 * s, c + 2.0 * s
            return (float(a) + 0.0, float(b) + 0.0)
    raise NotOneCutError(
        f"endpoint Newton iteration did not converge (initial quarter-widths {tried}); "
        "condition C1 may be violated")


def endpoint_residuals(p: Polynomial, a: float, b: float) -> np.ndarray:
    """Residuals of the two endpoint equations at [a, b] (for diagnostics and tests)."""
    _, cos_t = chebyshev_nodes(2 * p.degree + 8)
    F, _ = _endpoint_residual(npoly.polyder(p.coeffs), npoly.polyder(p.coeffs, 2),
                              0.5 * (a + b), 0.25 * (b - a), cos_t / 2.0)
    return F


# ---------------------------------------------------------------------------
# the factor P


def _divided_difference_coeffs(dV: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Coefficients in z of (V'(z) - V'(lam)) / (z - lam), one row per lam."""
    deg = dV.size - 1
    if deg < 1:
        return np.zeros((lam.size, 1))
    b = np.zeros((lam.size, deg))
    b[:, deg - 1] = dV[deg]
    for j in range(deg - 1, 0, -1):
        b[:, j - 1] = dV[j] + lam * b[:, j]
    return b


def compute_P(p: Polynomial, z=None, nodes: int = DEFAULT_NODES):
    """The analytic factor P of the density for a potential with support [-2, 2].

    The defining integral over the support is evaluated by Gauss-Chebyshev
    quadrature in ``x = 2 cos(theta)`` (which absorbs the inverse square-root
    weight exactly) and normalized so that the density has unit mass.

    Returns ``(values, P_poly, normalization)``: P evaluated at ``z`` (or
    None), P as a :class:`Polynomial` of degree 2m-2, and the constant the raw
    integral was multiplied by (1/pi for a consistent support).

    Raises InconsistencyError if that constant differs from 1/pi by more
    than 1e-8 relative, i.e. if [-2, 2] is not the support.
    """
    dV = npoly.polyder(p.coeffs)
    _, lam = chebyshev_nodes(max(nodes, p.degree + 2))
    rows = _divided_difference_coeffs(dV, lam)
    raw = np.pi * rows.mean(axis=0)              # int q(z, x) / sqrt(4 - x^2) dx
    xs, ws = semicircle_rule(max(nodes, p.degree + 2))
    mass_raw = np.sum(ws * npoly.polyval(xs, raw)) / (2.0 * np.pi)
    if not mass_raw > 0:
        raise InconsistencyError("density integrates to a non-positive mass")
    normalization = 1.0 / mass_raw
    if abs(normalization * np.pi - 1.0) > 1e-8:
        raise InconsistencyError(
            f"unit-mass normalization {normalization:.12g} differs from 1/pi; "
            "[-2, 2] is not the equilibrium support of this potential")
    P = Polynomial(raw * normalization)
    values = None if z is None else eval_potential(P, z)
    return values, P, normalization


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumMeasure:
    """Equilibrium measure of ``potential`` carried in the standard coordinate.

    ``standard`` is the potential rewritten so the support is [-2, 2] and
    ``amap`` converts original points to standard ones.
    """

    potential: Polynomial
    support: tuple[float, float]
    standard: Polynomial
    amap: AffineMap
    P: Polynomial
    normalization: float
    rescaled: bool = True

    @cached_property
    def P_zeros(self) -> np.ndarray:
        c = self.P.coeffs
        return np.roots(c[::-1]) if c.size > 1 else np.array([], dtype=complex)

    @cached_property
    def d_max(self) -> float:
        """Largest d with no zero of P within distance 2d of [-2, 2]."""
        if self.P_zeros.size == 0:
            return np.inf
        return float(np.min(distance_to_cut(self.P_zeros)) / 2.0)

    @cached_property
    def moments(self) -> np.ndarray:
        """int x^k rho(x) dx, k < N_MOMENTS (standard coordinate)."""
        x, w = semicircle_rule(DEFAULT_NODES)
        rw = w * self.P_eval(x) / (2.0 * np.pi)
        return np.array([np.sum(rw * x ** k) for k in range(N_MOMENTS)])

    def P_eval(self, z, order: int = 0):
        return eval_potential(self.P, z, order)

    def density(self, x):
        return density(self, x)

    def stieltjes(self, z):
        return stieltjes(self, z)

    def stieltjes_derivative(self, z):
        z = _off_cut(z)
        sx = sqrt_X(z)
        return 0.5 * (eval_potential(self.standard, z, 2) - self.P_eval(z, 1) * sx
                      - self.P_eval(z) * z / sx)

    def to_standard(self, lam):
        return self.amap.forward(lam)

    def from_standard(self, x):
        return self.amap.inverse(x)

    def density_original(self, lam):
        """Density in the original variable."""
        return self.amap.scale * density(self, self.amap.forward(lam))

    def stieltjes_original(self, z):
        return self.amap.scale * stieltjes(self, self.amap.forward(z))

    def expect(self, f, nodes: int = DEFAULT_NODES) -> float:
        """``int f(lam) rho(lam) dlam`` for a callable in the original variable."""
        x, w = semicircle_rule(nodes)
        vals = np.asarray(f(self.amap.inverse(x)))
        return float(np.real(np.sum(w * vals * self.P_eval(x))) / (2.0 * np.pi))

    def energy(self, nodes: int = DEFAULT_NODES) -> float:
        return energy(self, nodes=nodes)


def distance_to_cut(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    xr = np.clip(z.real, -2.0, 2.0)
    return np.abs(z - xr)


def _off_cut(z):
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (np.abs(z.real) <= 2.0)):
        raise DomainError("point lies on the cut [-2, 2]")
    return z


def equilibrium_measure(p: Polynomial, nodes: int = DEFAULT_NODES) -> EquilibriumMeasure:
    """Solve the one-cut equilibrium problem for ``p``.

    No positivity check is made here; run :func:`validate` on the result.
    """
    a, b = solve_support(p)
    std, amap = rescale_to_standard(p, a, b)
    _, P, norm = compute_P(std, nodes=nodes)
    return EquilibriumMeasure(potential=p, support=(a, b), standard=std, amap=amap,
                              P=P, normalization=norm)


def from_standard_potential(p: Polynomial, nodes: int = DEFAULT_NODES) -> EquilibriumMeasure:
    """Measure of a potential already known to have support [-2, 2] (e.g. V_t)."""
    _, P, norm = compute_P(p, nodes=nodes)
    return EquilibriumMeasure(potential=p, support=(-2.0, 2.0), standard=p,
                              amap=AffineMap(0.0, 1.0), P=P, normalization=norm)


def density(eq: EquilibriumMeasure, x):
    """``P(x) sqrt(4 - x^2) / (2 pi)`` on [-2, 2] (standard coordinate)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 2.0):
        raise DomainError("density is evaluated on [-2, 2] only")
    out = eq.P_eval(x) * np.sqrt(4.0 - x * x) / (2.0 * np.pi)
    return out[()] if np.ndim(out) == 0 else out


def stieltjes(eq: EquilibriumMeasure, z):
    """Closed-form Stieltjes transform ``(V'(z) - P(z) X^{1/2}(z)) / 2``.

    For |z| > FAR_FIELD the two terms cancel to many digits, so the
    Laurent series sum_k m_k z^{-k-1} in the moments of rho is used instead.
    """
    z = _off_cut(z)
    out = 0.5 * (eval_potential(eq.standard, z, 1) - eq.P_eval(z) * sqrt_X(z))
    far = np.abs(z) > FAR_FIELD
    if np.any(far):
        zf = z[far] if np.ndim(z) else z
        out = np.asarray(out)
        series = np.polynomial.polynomial.polyval(1.0 / zf, np.concatenate([[0.0], eq.moments]))
        if np.ndim(z):
            out[far] = series
        else:
            out = np.asarray(series)
    return out[()] if np.ndim(out) == 0 else out


def stieltjes_quadrature(eq: EquilibriumMeasure, z, nodes: int = DEFAULT_NODES,
                         tol: float = 1e-13, max_nodes: int = 1 << 16):
    """``int rho(x) / (z - x) dx`` by second-kind Gauss-Chebyshev, doubling to convergence.

    Independent of the closed form; used to validate it.
    """
    z = _off_cut(np.atleast_1d(z))
    prev = None
    N = nodes
    while N <= max_nodes:
        x, w = semicircle_rule(N)
        vals = (w * eq.P_eval(x) / (2.0 * np.pi)) @ (1.0 / (z[None, :] - x[:, None]))
        if prev is not None and np.max(np.abs(vals - prev)) < tol:
            return vals
        prev = vals
        N *= 2
    return prev


def energy(eq: EquilibriumMeasure, nodes: int = DEFAULT_NODES) -> float:
    """Energy ``int int log|x-y| rho rho - int V rho`` in the original variable.

    Uses log|x - y| = -sum_k (2/k) T_k(x/2) T_k(y/2) on [-2, 2], so the double
    integral is -sum_k (2/k) c_k^2 with c_k the Chebyshev moments of rho.
    """
    x, w = semicircle_rule(nodes)
    rw = w * eq.P_eval(x) / (2.0 * np.pi)
    theta = np.arccos(x / 2.0)
    kmax = eq.P.degree + 4
    k = np.arange(1, kmax + 1)
    ck = np.cos(np.outer(k, theta)) @ rw
    log_term = -np.sum(2.0 / k * ck**2)
    v_term = float(np.sum(rw * eval_potential(eq.standard, x)))
    # log|lam - mu| = log|x - y| - log(scale)
    return float(log_term - v_term - np.log(eq.amap.scale))


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]
    inf_P: float
    identity_residual: float
    d_max: float
    outside_margin: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "inf_P": self.inf_P,
            "identity_residual": self.identity_residual,
            "d_max": None if np.isinf(self.d_max) else self.d_max,
            "outside_margin": self.outside_margin,
            **self.details,
        }

    def raise_if_invalid(self):
        if not self.ok:
            raise ConditionViolation("; ".join(self.violations), self.as_dict())


def default_distance(eq: EquilibriumMeasure, cap: float = 0.5) -> float:
    """A contour distance safely inside the zero-free region of P."""
    return float(min(cap, 0.4 * eq.d_max))


def validate(eq: EquilibriumMeasure, d: float | None = None, grid: int = 2048,
             contour_points: int = 64, tol: float = 1e-8) -> ValidationReport:
    """Check conditions C1-C2 and the identity 2g - V' = -P X^{1/2}.

    (i)   inf of P over a uniform grid on [-2, 2] is positive;
    (ii)  the closed-form g agrees with an independent quadrature of the
          Cauchy integral of rho at points of L_d;
    (iii) the zeros of P and the zero-free radius d_max;
    (iv)  the effective potential does not dip below its value at the
          edges outside the support (the 'iff' part of C2).
    """
    violations = []
    xs = np.linspace(-2.0, 2.0, grid)
    # add the real parts of zeros sitting on the cut; a grid alone can step over them
    on_cut = eq.P_zeros[distance_to_cut(eq.P_zeros) < 1e-6].real
    xs = np.concatenate([xs, np.clip(on_cut, -2.0, 2.0)])
    inf_P = float(np.min(eq.P_eval(xs)))
    scale = max(1.0, float(np.max(np.abs(eq.P.coeffs))))
    if not inf_P > 1e-10 * scale:
        violations.append(f"C2 violated: inf P on [-2,2] = {inf_P:.3e}")

    real_zeros = eq.P_zeros[np.abs(eq.P_zeros.imag) < 1e-9].real
    margin = _outside_margin(eq, real_zeros)
    if margin < -1e-10:
        violations.append(f"C2 violated: effective potential drops by {-margin:.3e} outside the support")

    dmax = eq.d_max
    residual = np.nan
    if dmax > 0:
        dd = default_distance(eq) if d is None else d
        zs = build_contour(dd, contour_points, order=8).nodes
        g_quad = stieltjes_quadrature(eq, zs)
        g_closed = stieltjes(eq, zs)
        residual = float(np.max(np.abs(2.0 * g_quad - eval_potential(eq.standard, zs, 1)
                                       + eq.P_eval(zs) * sqrt_X(zs))))
        residual = max(residual, float(np.max(np.abs(g_quad - g_closed))))
        if not residual < tol:
            violations.append(f"identity 2g - V' = -P X^(1/2) fails: residual {residual:.3e}")
    return ValidationReport(ok=not violations, violations=violations, inf_P=inf_P,
                            identity_residual=residual, d_max=dmax, outside_margin=margin,
                            details={"P_zeros": [[float(z.real), float(z.imag)] for z in eq.P_zeros]})


def _outside_margin(eq: EquilibriumMeasure, real_zeros: np.ndarray) -> float:
    """min over |x| > 2 of V_eff(x) - V_eff(edge), V_eff' = P(x) X^{1/2}(x)."""
    reach = 2.0 + (np.max(np.abs(real_zeros)) if real_zeros.size else 0.0) + 1.0
    worst = np.inf
    for sgn in (1.0, -1.0):
        # substitute x = sgn (2 + u^2) to remove the square-root endpoint behaviour
        u = np.linspace(0.0, np.sqrt(reach), 4001)
        x = sgn * (2.0 + u * u)
        integrand = eq.P_eval(x) * np.sqrt(x * x - 4.0) * 2.0 * u
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(u))])
        worst = min(worst, float(cum.min()))
    return worst
